"""Autoencoder, classical benchmark and the coupled autoencoder + circuit model."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import checkpoint, nn, qgrad, vqc
from .exceptions import ConfigError, ShapeError
from .nn import DenseLayer, Network
from .vqc import VqcConfig

DEEP_HIDDEN = (64, 44, 32, 24)


@dataclass
class AutoEncoder:
    encoder: Network
    decoder: Network

    def __post_init__(self):
        if self.encoder.n_out != self.decoder.n_in:
            raise ShapeError(
                f"encoder emits {self.encoder.n_out} latents, decoder expects {self.decoder.n_in}"
            )
        if self.decoder.n_out != self.encoder.n_in:
            raise ShapeError("decoder output width must equal encoder input width")

    @property
    def latent_dim(self):
        return self.encoder.n_out

    @property
    def n_features(self):
        return self.encoder.n_in

    @classmethod
    def build(
        cls,
        n_features,
        latent_dim,
        hidden=(),
        rng=None,
        latent_activation="sigmoid",
        output_activation="sigmoid",
    ):
        """Mirror-symmetric autoencoder with ReLU hidden layers.

        ``hidden=()`` gives the shallow ``[D, latent]`` / ``[latent, D]`` pair,
        ``hidden=DEEP_HIDDEN`` the six-layer encoder ``[D, 64, 44, 32, 24, latent]``.
        """
        rng = np.random.default_rng() if rng is None else rng
        hidden = tuple(hidden)
        enc_sizes = [n_features, *hidden, latent_dim]
        dec_sizes = enc_sizes[::-1]
        acts = ["relu"] * len(hidden)
        encoder = Network.from_sizes(enc_sizes, acts + [latent_activation], rng)
        decoder = Network.from_sizes(dec_sizes, acts + [output_activation], rng)
        return cls(encoder, decoder)

    def copy(self):
        return AutoEncoder(self.encoder.copy(), self.decoder.copy())


def ae_forward(model, X):
    """Latent codes and reconstructions ``(z, x_hat)`` for a batch."""
    Z = model.encoder(X)
    return Z, model.decoder(Z)


def ae_loss_and_grads(model, X):
    """Reconstruction loss with encoder and decoder gradients."""
    Z = model.encoder(X)
    X_hat = model.decoder(Z)
    loss = nn.mse_loss(X, X_hat)
    _, dZ, dec_grads = nn.forward_backward(model.decoder, Z, nn.mse_grad(X, X_hat))
    _, _, enc_grads = nn.forward_backward(model.encoder, X, dZ)
    return loss, enc_grads, dec_grads


@dataclass
class GqcModel:
    """Autoencoder whose latent code also feeds the classifier circuit."""

    autoencoder: AutoEncoder
    vqc_config: VqcConfig
    theta: np.ndarray
    lam: float = 0.7

    def __post_init__(self):
        if self.autoencoder.latent_dim != self.vqc_config.latent_dim:
            raise ShapeError(
                f"latent dim {self.autoencoder.latent_dim} != n_qubits*segments "
                f"{self.vqc_config.latent_dim}"
            )
        if not 0.0 < self.lam < 1.0:
            raise ConfigError(f"must lie in (0, 1), got {self.lam}", field="lambda")
        self.theta = vqc.check_theta(self.theta, self.vqc_config).copy()

    @classmethod
    def build(cls, n_features, vqc_config, lam=0.7, hidden=(), rng=None):
        rng = np.random.default_rng() if rng is None else rng
        ae = AutoEncoder.build(n_features, vqc_config.latent_dim, hidden, rng)
        return cls(ae, vqc_config, vqc.init_theta(vqc_config, rng), lam)

    def parameters(self):
        """``[*encoder params, *decoder params, theta]`` (live arrays)."""
        return self.autoencoder.encoder.parameters() + self.autoencoder.decoder.parameters() + [
            self.theta
        ]

    def set_parameters(self, params):
        n_enc = 2 * len(self.autoencoder.encoder.layers)
        n_dec = 2 * len(self.autoencoder.decoder.layers)
        if len(params) != n_enc + n_dec + 1:
            raise ShapeError("parameter list does not match the model")
        self.autoencoder.encoder.set_parameters(params[:n_enc])
        self.autoencoder.decoder.set_parameters(params[n_enc : n_enc + n_dec])
        self.theta = vqc.check_theta(params[-1], self.vqc_config).copy()

    def copy(self):
        return GqcModel(self.autoencoder.copy(), self.vqc_config, self.theta.copy(), self.lam)


@dataclass
class TwoStepModel:
    """Frozen autoencoder followed by an independently trained circuit."""

    autoencoder: AutoEncoder
    vqc_config: VqcConfig
    theta: np.ndarray

    def __post_init__(self):
        if self.autoencoder.latent_dim != self.vqc_config.latent_dim:
            raise ShapeError("autoencoder latent dim does not match the circuit")
        self.theta = vqc.check_theta(self.theta, self.vqc_config).copy()


@dataclass
class GqcLosses:
    total: float
    recon: float
    classification: float

    def as_tuple(self):
        return self.total, self.recon, self.classification


@dataclass
class GqcGradients:
    encoder: list
    decoder: list
    theta: np.ndarray
    losses: GqcLosses = field(default=None)

    def as_list(self):
        return self.encoder + self.decoder + [self.theta]


def _check_xy(X, y, n_features):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    if X.ndim != 2 or X.shape[1] != n_features:
        raise ShapeError(f"expected features of shape (M, {n_features}), got {X.shape}")
    if len(y) != len(X):
        raise ShapeError(f"{len(X)} samples but {len(y)} labels")
    return X, y


def combine_losses(recon, classification, lam):
    """Coupled objective ``(1 - lam) * recon + lam * classification``."""
    return (1.0 - lam) * recon + lam * classification


def gqc_loss(model, X, y):
    """``(total, recon, classification)`` of the coupled objective on one batch."""
    X, y = _check_xy(X, y, model.autoencoder.n_features)
    Z, X_hat = ae_forward(model.autoencoder, X)
    recon = nn.mse_loss(X, X_hat)
    prob = vqc.expectation_to_probability(vqc.forward_batch(Z, model.theta, model.vqc_config))
    cls = nn.bce_loss(y, prob)
    return combine_losses(recon, cls, model.lam), recon, cls


def gqc_backward(model, X, y):
    """Gradients of the coupled objective for encoder, decoder and circuit angles.

    The encoder receives the reconstruction gradient through the decoder plus
    the classification gradient through the circuit's latent-feature derivatives.
    """
    X, y = _check_xy(X, y, model.autoencoder.n_features)
    lam = model.lam
    ae = model.autoencoder
    Z = ae.encoder(X)
    X_hat = ae.decoder(Z)
    recon = nn.mse_loss(X, X_hat)
    _, dZ_recon, dec_grads = nn.forward_backward(ae.decoder, Z, (1.0 - lam) * nn.mse_grad(X, X_hat))

    values, d_theta, d_z, _ = qgrad.adjoint_gradient_batch(Z, model.theta, model.vqc_config)
    prob = vqc.expectation_to_probability(values)
    cls = nn.bce_loss(y, prob)
    # dp/df = 1/2 for p = (f + 1) / 2
    d_out = lam * 0.5 * nn.bce_grad(y, prob)
    dZ_class = d_out[:, None] * d_z
    theta_grad = (d_out @ d_theta).reshape(model.vqc_config.theta_shape)

    _, _, enc_grads = nn.forward_backward(ae.encoder, X, dZ_recon + dZ_class)
    losses = GqcLosses(combine_losses(recon, cls, lam), recon, cls)
    return GqcGradients(enc_grads, dec_grads, theta_grad, losses)


def vqc_loss_and_grad(Z, y, theta, cfg):
    """BCE of the circuit on fixed latents and its gradient w.r.t. ``theta``."""
    values, d_theta, _, _ = qgrad.adjoint_gradient_batch(Z, theta, cfg)
    prob = vqc.expectation_to_probability(values)
    loss = nn.bce_loss(y, prob)
    d_out = 0.5 * nn.bce_grad(y, prob)
    return loss, (d_out @ d_theta).reshape(cfg.theta_shape)


def build_classical(n_features, hidden=(16,), rng=None):
    """Feed-forward classifier ``[D, *hidden, 1]`` with ReLU hidden layers and sigmoid output."""
    rng = np.random.default_rng() if rng is None else rng
    hidden = tuple(hidden)
    return Network.from_sizes([n_features, *hidden, 1], ["relu"] * len(hidden) + ["sigmoid"], rng)


def classical_forward(net, X):
    """Class-1 probabilities of the classical network, shape ``(M,)``."""
    return net(X)[:, 0]


def classical_loss_and_grads(net, X, y):
    prob = classical_forward(net, X)
    loss = nn.bce_loss(y, prob)
    _, _, grads = nn.forward_backward(net, X, nn.bce_grad(y, prob)[:, None])
    return loss, grads


# -- checkpoints ---------------------------------------------------------------


def _net_meta(net):
    return {"sizes": net.sizes, "activations": [layer.activation for layer in net.layers]}


def _net_from(arrays, prefix, meta):
    layers = []
    for i, act in enumerate(meta["activations"]):
        layers.append(
            DenseLayer(arrays[f"{prefix}layer{i}.weights"], arrays[f"{prefix}layer{i}.biases"], act)
        )
    return Network(layers)


def _vqc_meta(cfg):
    return {"n_qubits": cfg.n_qubits, "segments": cfg.segments, "reps": cfg.reps}


def save_model(path, model, metadata=None):
    """Serialize a :class:`GqcModel`, :class:`TwoStepModel` or classical :class:`Network`."""
    meta = dict(metadata or {})
    arrays = {}
    if isinstance(model, (GqcModel, TwoStepModel)):
        ae = model.autoencoder
        meta["model_type"] = "gqc" if isinstance(model, GqcModel) else "two_step"
        meta["encoder"] = _net_meta(ae.encoder)
        meta["decoder"] = _net_meta(ae.decoder)
        meta["vqc"] = _vqc_meta(model.vqc_config)
        if isinstance(model, GqcModel):
            meta["lambda"] = model.lam
        arrays.update(ae.encoder.named_parameters("encoder."))
        arrays.update(ae.decoder.named_parameters("decoder."))
        arrays["theta"] = model.theta
    elif isinstance(model, Network):
        meta["model_type"] = "classical"
        meta["network"] = _net_meta(model)
        arrays.update(model.named_parameters("network."))
    else:
        raise TypeError(f"cannot serialize {type(model).__name__}")
    checkpoint.save_arrays(path, arrays, meta)


def load_model(path):
    """Inverse of :func:`save_model`; returns ``(model, metadata)``."""
    arrays, meta = checkpoint.load_arrays(path)
    kind = meta.get("model_type")
    if kind == "classical":
        return _net_from(arrays, "network.", meta["network"]), meta
    if kind in ("gqc", "two_step"):
        ae = AutoEncoder(
            _net_from(arrays, "encoder.", meta["encoder"]),
            _net_from(arrays, "decoder.", meta["decoder"]),
        )
        cfg = VqcConfig(**meta["vqc"])
        if kind == "gqc":
            return GqcModel(ae, cfg, arrays["theta"], meta["lambda"]), meta
        return TwoStepModel(ae, cfg, arrays["theta"]), meta
    raise ValueError(f"{path}: unknown model_type {kind!r}")


def model_scores(model, X):
    """Class-1 scores in [0, 1] used for ROC analysis."""
    if isinstance(model, Network):
        return classical_forward(model, X)
    Z = model.autoencoder.encoder(X)
    return vqc.expectation_to_probability(vqc.forward_batch(Z, model.theta, model.vqc_config))


def model_latents(model, X):
    if isinstance(model, Network):
        raise TypeError("the classical benchmark has no latent space")
    return model.autoencoder.encoder(X)


def model_n_features(model):
    if isinstance(model, Network):
        return model.n_in
    return model.autoencoder.n_features
