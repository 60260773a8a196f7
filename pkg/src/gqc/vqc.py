"""Data re-uploading variational classifier circuit.

The latent vector ``z`` of length ``n_qubits * segments`` is cut into
``segments`` chunks of ``n_qubits`` features. Each chunk is loaded by a
ZZ-style feature map and followed by a trainable RY/CNOT block::

    |0..0> -> U(z_1) G(theta_1) ... U(z_d) G(theta_d) -> <Z_0>

Trainable angles are stored as an array of shape ``(segments, 2 * n_qubits * reps)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import qsim
from .exceptions import DomainError, NumericError, ShapeError, SizeError
from .qsim import Gate


@dataclass(frozen=True)
class VqcConfig:
    n_qubits: int = 8
    segments: int = 2
    reps: int = 2

    def __post_init__(self):
        if self.n_qubits < 2:
            raise SizeError("the feature map needs at least 2 qubits")
        if self.n_qubits > qsim.MAX_QUBITS:
            raise SizeError(f"at most {qsim.MAX_QUBITS} qubits are supported")
        if self.segments < 1:
            raise SizeError("segments must be >= 1")
        if self.reps < 1:
            raise SizeError("reps must be >= 1")

    @property
    def latent_dim(self):
        return self.n_qubits * self.segments

    @property
    def block_size(self):
        return 2 * self.n_qubits * self.reps

    @property
    def theta_shape(self):
        return (self.segments, self.block_size)

    @property
    def n_params(self):
        return self.segments * self.block_size

    @classmethod
    def for_latent_dim(cls, latent_dim, n_qubits, reps=2):
        if latent_dim % n_qubits:
            raise SizeError(f"latent dim {latent_dim} is not a multiple of {n_qubits} qubits")
        return cls(n_qubits=n_qubits, segments=latent_dim // n_qubits, reps=reps)


def init_theta(cfg, rng):
    """Draw initial trainable angles uniformly from [-pi, pi)."""
    return rng.uniform(-np.pi, np.pi, size=cfg.theta_shape)


def check_theta(theta, cfg):
    theta = np.asarray(theta, dtype=np.float64)
    if theta.size != cfg.n_params:
        raise ShapeError(f"expected {cfg.n_params} trainable angles, got {theta.size}")
    return theta.reshape(cfg.theta_shape)


def interaction_angle(a, b):
    """Pair interaction angle ``(pi - a) * (pi - b)``."""
    if not (math.isfinite(a) and math.isfinite(b)):
        raise NumericError(f"non-finite feature in interaction_angle({a!r}, {b!r})")
    return (math.pi - a) * (math.pi - b)


def build_feature_map(z_k, n_qubits=None):
    """Gates encoding one chunk: H layer, RZ(z_j) per qubit, RZZ on neighbours."""
    z_k = np.asarray(z_k, dtype=np.float64).ravel()
    n = len(z_k) if n_qubits is None else n_qubits
    if len(z_k) != n:
        raise ShapeError(f"feature chunk has length {len(z_k)}, expected {n}")
    if n < 2:
        raise ShapeError("feature map needs at least 2 features")
    gates = [Gate("H", (j,)) for j in range(n)]
    gates += [Gate("RZ", (j,), z_k[j]) for j in range(n)]
    gates += [
        Gate("RZZ", (j, j + 1), interaction_angle(z_k[j], z_k[j + 1])) for j in range(n - 1)
    ]
    return gates


def build_ansatz(theta_block, n_qubits, reps):
    """Trainable block: per repetition an RY layer, a CNOT chain, a second RY layer."""
    theta_block = np.asarray(theta_block, dtype=np.float64).ravel()
    if len(theta_block) != 2 * n_qubits * reps:
        raise ShapeError(
            f"ansatz block needs {2 * n_qubits * reps} angles, got {len(theta_block)}"
        )
    gates = []
    for rep in range(reps):
        angles = theta_block[2 * n_qubits * rep : 2 * n_qubits * (rep + 1)]
        gates += [Gate("RY", (j,), angles[j]) for j in range(n_qubits)]
        gates += [Gate("CNOT", (j, j + 1)) for j in range(n_qubits - 1)]
        gates += [Gate("RY", (j,), angles[n_qubits + j]) for j in range(n_qubits)]
    return gates


def build_circuit(z, theta, cfg):
    """Concrete gate list of the full circuit for a single latent vector."""
    z = _check_z(z, cfg)
    theta = check_theta(theta, cfg)
    n = cfg.n_qubits
    gates = []
    for k in range(cfg.segments):
        gates += build_feature_map(z[k * n : (k + 1) * n], n)
        gates += build_ansatz(theta[k], n, cfg.reps)
    return gates


class Op(NamedTuple):
    """One gate of the circuit template with its angle binding.

    ``source`` is ``None`` for fixed gates, ``("theta", i)`` for the i-th flat
    trainable angle, ``("z", j)`` for an RZ loading feature ``j`` and
    ``("zz", j, k)`` for an RZZ with angle ``(pi - z_j)(pi - z_k)``.
    """

    kind: str
    targets: tuple
    source: tuple | None


def circuit_template(cfg):
    """Gate sequence with symbolic angle bindings, shared by forward and gradients."""
    return _template(cfg.n_qubits, cfg.segments, cfg.reps)


_TEMPLATES: dict = {}


def _template(n, segments, reps):
    key = (n, segments, reps)
    if key in _TEMPLATES:
        return _TEMPLATES[key]
    ops = []
    block = 2 * n * reps
    for k in range(segments):
        base = k * n
        ops += [Op("H", (j,), None) for j in range(n)]
        ops += [Op("RZ", (j,), ("z", base + j)) for j in range(n)]
        ops += [Op("RZZ", (j, j + 1), ("zz", base + j, base + j + 1)) for j in range(n - 1)]
        for rep in range(reps):
            off = k * block + 2 * n * rep
            ops += [Op("RY", (j,), ("theta", off + j)) for j in range(n)]
            ops += [Op("CNOT", (j, j + 1), None) for j in range(n - 1)]
            ops += [Op("RY", (j,), ("theta", off + n + j)) for j in range(n)]
    ops = tuple(ops)
    _TEMPLATES[key] = ops
    return ops


def bind_angles(ops, Z, theta_flat):
    """Resolve each op's angle for a batch ``Z`` of shape ``(B, latent_dim)``.

    Returns a list aligned with ``ops``; entries are ``None`` for fixed gates,
    a float for trainable angles and a ``(B,)`` array for data-derived angles.
    """
    angles = []
    for op in ops:
        src = op.source
        if src is None:
            angles.append(None)
        elif src[0] == "theta":
            angles.append(float(theta_flat[src[1]]))
        elif src[0] == "z":
            angles.append(Z[:, src[1]])
        else:
            angles.append((np.pi - Z[:, src[1]]) * (np.pi - Z[:, src[2]]))
    return angles


def _check_z(z, cfg):
    z = np.asarray(z, dtype=np.float64).ravel()
    if len(z) != cfg.latent_dim:
        raise ShapeError(f"latent vector has length {len(z)}, circuit expects {cfg.latent_dim}")
    if not np.all(np.isfinite(z)):
        raise NumericError("non-finite latent feature")
    return z


def check_batch(Z, cfg):
    Z = np.asarray(Z, dtype=np.float64)
    if Z.ndim != 2 or Z.shape[1] != cfg.latent_dim:
        raise ShapeError(f"expected latent batch of shape (B, {cfg.latent_dim}), got {Z.shape}")
    if not np.all(np.isfinite(Z)):
        raise NumericError("non-finite latent feature")
    return Z


def run_template(ops, angles, n_qubits, batch):
    amps = qsim.zero_amplitudes(n_qubits, batch)
    for op, angle in zip(ops, angles):
        amps = qsim.apply_gate_array(amps, op.kind, op.targets, angle)
    return amps


def forward_batch(Z, theta, cfg):
    """Circuit outputs <Z_0> for every row of ``Z``; shape ``(B,)``."""
    Z = check_batch(Z, cfg)
    theta = check_theta(theta, cfg)
    ops = circuit_template(cfg)
    amps = run_template(ops, bind_angles(ops, Z, theta.ravel()), cfg.n_qubits, len(Z))
    return np.clip(qsim.expectation_z0_array(amps), -1.0, 1.0)


def forward(z, theta, cfg):
    """Circuit output <Z_0> in [-1, 1] for one latent vector."""
    z = _check_z(z, cfg)
    return float(forward_batch(z[None, :], theta, cfg)[0])


def _check_expectation(value):
    arr = np.asarray(value, dtype=np.float64)
    if np.any(~np.isfinite(arr)) or np.any(np.abs(arr) > 1.0 + 1e-9):
        raise DomainError("expectation values must lie in [-1, 1]")
    return arr


def predict(expectation):
    """Hard label ``(sign(e) + 1) / 2`` with ``sign(0) = +1``."""
    arr = _check_expectation(expectation)
    labels = (arr >= 0.0).astype(np.int64)
    return int(labels) if labels.ndim == 0 else labels


def expectation_to_probability(expectation):
    """Affine map of [-1, 1] onto [0, 1] used as the class-1 probability."""
    arr = _check_expectation(expectation)
    prob = np.clip((arr + 1.0) / 2.0, 0.0, 1.0)
    return float(prob) if prob.ndim == 0 else prob
