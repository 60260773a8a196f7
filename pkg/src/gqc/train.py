"""Training loops for the classical, two-step and coupled (GQC) paradigms."""

from __future__ import annotations

import csv
import dataclasses
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from . import models, nn, vqc
from .exceptions import ConfigError, TrainingError
from .models import DEEP_HIDDEN, AutoEncoder, GqcModel, TwoStepModel
from .vqc import VqcConfig

log = logging.getLogger(__name__)

PARADIGMS = ("classical", "two_step", "gqc")

# Axis order of the sequential search and the candidates tried on the real data.
GRID_AXES = (
    ("batch_size", (128, 256, 512, 1024, 2048)),
    ("learning_rate", (1e-3, 1e-2, 1e-1)),
    ("reps", (2, 4, 8)),
    ("lam", (0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)),
)


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters of one training run.

    ``batch_size``/``learning_rate``/``epochs`` drive the classifier (classical
    network, circuit of the two-step model, or the coupled GQC model). The
    ``ae_*`` fields drive step one of the two-step paradigm.
    """

    paradigm: str = "gqc"
    batch_size: int = 1024
    learning_rate: float = 1e-2
    epochs: int = 20
    lam: float = 0.7
    vqc: VqcConfig = field(default_factory=VqcConfig)
    seed: int = 0
    classical_hidden: tuple = (16,)
    gqc_hidden: tuple = ()
    ae_hidden: tuple = DEEP_HIDDEN
    ae_batch_size: int = 128
    ae_learning_rate: float = 0.0012
    ae_epochs: int = 20

    def __post_init__(self):
        if self.paradigm not in PARADIGMS:
            raise ConfigError(f"must be one of {PARADIGMS}, got {self.paradigm!r}", "paradigm")
        for name in ("batch_size", "ae_batch_size"):
            if int(getattr(self, name)) < 1:
                raise ConfigError("must be >= 1", name)
        for name in ("learning_rate", "ae_learning_rate"):
            if not getattr(self, name) > 0:
                raise ConfigError("must be > 0", name)
        for name in ("epochs", "ae_epochs"):
            if int(getattr(self, name)) < 0:
                raise ConfigError("must be >= 0", name)
        if self.paradigm == "gqc" and not 0.0 < self.lam < 1.0:
            raise ConfigError(f"must lie in (0, 1), got {self.lam}", "lambda")
        for name in ("classical_hidden", "gqc_hidden", "ae_hidden"):
            object.__setattr__(self, name, tuple(int(h) for h in getattr(self, name)))

    @classmethod
    def for_paradigm(cls, paradigm, **overrides):
        """Paradigm-specific defaults, then ``overrides``."""
        base = {}
        if paradigm == "classical":
            base = {"batch_size": 128, "learning_rate": 1e-3}
        base.update(overrides)
        return cls(paradigm=paradigm, **base)

    def replace(self, **changes):
        if "reps" in changes:
            changes["vqc"] = dataclasses.replace(self.vqc, reps=changes.pop("reps"))
        return dataclasses.replace(self, **changes)


@dataclass
class TrainRecord:
    """Per-epoch losses of one run.

    ``selected_epoch`` is 1-based; 0 means no epoch improved on the initial
    parameters (whose validation loss is ``initial_val_loss``), ``None`` means
    no epochs ran.
    """

    train_loss: list = field(default_factory=list)
    val_loss: list = field(default_factory=list)
    train_parts: list = field(default_factory=list)
    val_parts: list = field(default_factory=list)
    selected_epoch: int | None = None
    initial_val_loss: float | None = None
    wall_time: float = 0.0

    @property
    def best_val_loss(self):
        if self.selected_epoch is None:
            return None
        if self.selected_epoch == 0:
            return self.initial_val_loss
        return self.val_loss[self.selected_epoch - 1]

    def write_csv(self, path):
        """Epoch log: ``epoch, train_loss, val_loss`` plus any loss parts."""
        part_names = sorted(self.train_parts[0]) if self.train_parts else []
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(
                ["epoch", "train_loss", "val_loss"]
                + [f"train_{p}" for p in part_names]
                + [f"val_{p}" for p in part_names]
                + ["selected"]
            )
            for i, (tr, va) in enumerate(zip(self.train_loss, self.val_loss)):
                row = [i + 1, repr(tr), repr(va)]
                row += [repr(self.train_parts[i][p]) for p in part_names]
                row += [repr(self.val_parts[i][p]) for p in part_names]
                row.append(int(self.selected_epoch == i + 1))
                writer.writerow(row)


def epoch_batches(n_samples, batch_size, seed, epoch):
    """Shuffled index batches covering every sample once; the last batch may be short."""
    order = np.random.default_rng([seed, epoch]).permutation(n_samples)
    return [order[i : i + batch_size] for i in range(0, n_samples, batch_size)]


def _fit(get_params, set_params, batch_step, evaluate, n_train, batch_size, lr, epochs, seed):
    """Generic Adam minibatch loop with best-validation-epoch selection.

    ``batch_step(idx)`` returns ``(loss, grads, parts)`` and ``evaluate()``
    returns ``(val_loss, parts)``. The initial parameters compete as epoch 0,
    so the returned model never validates worse than the starting point. The
    parameters of the selected epoch are restored before returning.
    """
    record = TrainRecord()
    start = time.perf_counter()
    record.initial_val_loss = evaluate()[0]
    state = nn.AdamState(learning_rate=lr)
    best = (record.initial_val_loss, 0, [p.copy() for p in get_params()])
    for epoch in range(1, epochs + 1):
        total, parts_sum = 0.0, {}
        for idx in epoch_batches(n_train, batch_size, seed, epoch):
            loss, grads, parts = batch_step(idx)
            if not np.isfinite(loss):
                raise TrainingError("non-finite training loss", epoch)
            weight = len(idx) / n_train
            total += weight * loss
            for k, v in parts.items():
                parts_sum[k] = parts_sum.get(k, 0.0) + weight * v
            try:
                new_params, state = nn.adam_step(get_params(), grads, state)
            except ArithmeticError as exc:
                raise TrainingError(str(exc), epoch) from exc
            set_params(new_params)
        val_loss, val_parts = evaluate()
        if not np.isfinite(val_loss):
            raise TrainingError("non-finite validation loss", epoch)
        record.train_loss.append(total)
        record.val_loss.append(val_loss)
        if parts_sum:
            record.train_parts.append(parts_sum)
            record.val_parts.append(val_parts)
        if val_loss < best[0]:
            best = (val_loss, epoch, [p.copy() for p in get_params()])
        log.debug("epoch %d train %.6f val %.6f", epoch, total, val_loss)
    if epochs > 0:
        record.selected_epoch = best[1]
        set_params(best[2])
    record.wall_time = time.perf_counter() - start
    return record


def _check_paradigm(cfg, expected):
    if cfg.paradigm != expected:
        raise ConfigError(f"expected paradigm {expected!r}, got {cfg.paradigm!r}", "paradigm")


def train_classical(cfg, train, val):
    """Train the feed-forward benchmark on BCE; returns ``(network, record)``."""
    _check_paradigm(cfg, "classical")
    rng = np.random.default_rng([cfg.seed, 0])
    net = models.build_classical(train.n_features, cfg.classical_hidden, rng)
    X, y = train.features, train.labels

    def step(idx):
        loss, grads = models.classical_loss_and_grads(net, X[idx], y[idx])
        return loss, grads, {}

    def evaluate():
        return nn.bce_loss(val.labels, models.classical_forward(net, val.features)), {}

    record = _fit(
        net.parameters, net.set_parameters, step, evaluate,
        len(X), cfg.batch_size, cfg.learning_rate, cfg.epochs, cfg.seed,
    )
    return net, record


def train_autoencoder(ae, train, val, batch_size, lr, epochs, seed):
    """Reconstruction-only training of ``ae`` in place; returns the record."""
    X = train.features

    def get():
        return ae.encoder.parameters() + ae.decoder.parameters()

    n_enc = 2 * len(ae.encoder.layers)

    def set_(params):
        ae.encoder.set_parameters(params[:n_enc])
        ae.decoder.set_parameters(params[n_enc:])

    def step(idx):
        loss, enc, dec = models.ae_loss_and_grads(ae, X[idx])
        return loss, enc + dec, {}

    def evaluate():
        return nn.mse_loss(val.features, models.ae_forward(ae, val.features)[1]), {}

    return _fit(get, set_, step, evaluate, len(X), batch_size, lr, epochs, seed)


def train_vqc(Z_train, y_train, Z_val, y_val, cfg, theta, batch_size, lr, epochs, seed):
    """Train circuit angles on fixed latents; returns ``(theta, record)``."""
    holder = [vqc.check_theta(theta, cfg).copy()]

    def step(idx):
        loss, grad = models.vqc_loss_and_grad(Z_train[idx], y_train[idx], holder[0], cfg)
        return loss, [grad], {}

    def evaluate():
        prob = vqc.expectation_to_probability(vqc.forward_batch(Z_val, holder[0], cfg))
        return nn.bce_loss(y_val, prob), {}

    def set_(params):
        holder[0] = params[0]

    record = _fit(
        lambda: [holder[0]], set_, step, evaluate, len(Z_train), batch_size, lr, epochs, seed
    )
    return holder[0], record


def train_two_step(cfg, train, val):
    """Autoencoder on MSE first, then the circuit on the frozen latents.

    Returns ``(TwoStepModel, (ae_record, vqc_record))``.
    """
    _check_paradigm(cfg, "two_step")
    rng = np.random.default_rng([cfg.seed, 0])
    ae = AutoEncoder.build(train.n_features, cfg.vqc.latent_dim, cfg.ae_hidden, rng)
    ae_record = train_autoencoder(
        ae, train, val, cfg.ae_batch_size, cfg.ae_learning_rate, cfg.ae_epochs, cfg.seed
    )
    Z_train = ae.encoder(train.features)
    Z_val = ae.encoder(val.features)
    theta0 = vqc.init_theta(cfg.vqc, np.random.default_rng([cfg.seed, 1]))
    theta, vqc_record = train_vqc(
        Z_train, train.labels, Z_val, val.labels, cfg.vqc, theta0,
        cfg.batch_size, cfg.learning_rate, cfg.epochs, cfg.seed + 1,
    )
    return TwoStepModel(ae, cfg.vqc, theta), (ae_record, vqc_record)


def train_gqc(cfg, train, val):
    """Joint training of encoder, decoder and circuit on the coupled loss."""
    _check_paradigm(cfg, "gqc")
    rng = np.random.default_rng([cfg.seed, 0])
    model = GqcModel.build(train.n_features, cfg.vqc, cfg.lam, cfg.gqc_hidden, rng)
    X, y = train.features, train.labels

    def step(idx):
        g = models.gqc_backward(model, X[idx], y[idx])
        parts = {"recon": g.losses.recon, "class": g.losses.classification}
        return g.losses.total, g.as_list(), parts

    def evaluate():
        total, recon, cls = models.gqc_loss(model, val.features, val.labels)
        return total, {"recon": recon, "class": cls}

    record = _fit(
        model.parameters, model.set_parameters, step, evaluate,
        len(X), cfg.batch_size, cfg.learning_rate, cfg.epochs, cfg.seed,
    )
    return model, record


def train(cfg, train_ds, val_ds):
    """Dispatch on ``cfg.paradigm``; returns ``(model, records)`` with ``records`` a list."""
    if cfg.paradigm == "classical":
        model, record = train_classical(cfg, train_ds, val_ds)
        return model, [record]
    if cfg.paradigm == "two_step":
        model, records = train_two_step(cfg, train_ds, val_ds)
        return model, list(records)
    model, record = train_gqc(cfg, train_ds, val_ds)
    return model, [record]


def accuracy(model, ds):
    """Fraction of correct hard labels (threshold 0.5 on the class-1 score)."""
    scores = models.model_scores(model, ds.features)
    return float(np.mean((scores >= 0.5).astype(np.int64) == ds.labels))


_AXIS_ALIASES = {"r": "reps", "lambda": "lam", "lr": "learning_rate", "batch": "batch_size"}


def grid_search(axes, base_cfg, train_ds, val_ds):
    """Sequential one-axis-at-a-time search maximizing validation accuracy.

    ``axes`` is an ordered sequence of ``(name, candidates)``. Each axis is
    scanned with all earlier winners fixed; ties keep the earlier candidate.
    Returns ``(best_cfg, trial_log)``.
    """
    best_cfg = base_cfg
    trials = []
    for name, candidates in axes:
        name = _AXIS_ALIASES.get(name, name)
        candidates = list(candidates)
        if not candidates:
            raise ConfigError("empty candidate list", name)
        if name not in ("batch_size", "learning_rate", "reps", "lam", "epochs"):
            raise ConfigError("unknown search axis", name)
        winner = None
        for value in candidates:
            trial_index = len(trials)
            seed = int(np.random.SeedSequence([base_cfg.seed, trial_index]).generate_state(1)[0])
            cfg = best_cfg.replace(**{name: value}).replace(seed=seed)
            model, records = train(cfg, train_ds, val_ds)
            acc = accuracy(model, val_ds)
            trials.append(
                {
                    "trial": trial_index,
                    "axis": name,
                    "value": value,
                    "seed": seed,
                    "val_accuracy": acc,
                    "val_loss": records[-1].best_val_loss,
                }
            )
            log.info("trial %d %s=%s accuracy %.4f", trial_index, name, value, acc)
            if winner is None or acc > winner[0]:
                winner = (acc, value)
        best_cfg = best_cfg.replace(**{name: winner[1]})
    return best_cfg, trials
