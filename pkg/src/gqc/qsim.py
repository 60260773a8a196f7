"""Dense state-vector simulation for the gate set used by the classifier circuit.

Qubit ``q`` corresponds to bit ``q`` of the amplitude index, i.e. qubit 0 is
the least-significant bit. Every low-level routine accepts amplitude arrays
with an optional leading batch axis, shape ``(..., 2**n)``, so a minibatch of
circuits with per-sample angles can be simulated in one sweep.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .exceptions import ShapeError, SizeError

MAX_QUBITS = 24
NORM_ATOL = 1e-12

GATE_ARITY = {"H": 1, "RY": 1, "RZ": 1, "CNOT": 2, "RZZ": 2}
PARAMETRIC = frozenset({"RY", "RZ", "RZZ"})

# Hermitian generator P of each rotation exp(-i theta P / 2).
GENERATOR = {"RY": "Y", "RZ": "Z", "RZZ": "ZZ"}

_INV_SQRT2 = 1.0 / np.sqrt(2.0)
_HADAMARD = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=np.complex128) * _INV_SQRT2
_PAULI_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=np.complex128)


@dataclass(frozen=True)
class Gate:
    """A single gate: ``kind`` acting on ``targets`` with an optional ``angle``.

    For CNOT the first target is the control.
    """

    kind: str
    targets: tuple
    angle: float | None = None

    def __post_init__(self):
        if self.kind not in GATE_ARITY:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        targets = tuple(int(t) for t in np.atleast_1d(self.targets))
        object.__setattr__(self, "targets", targets)
        if len(targets) != GATE_ARITY[self.kind]:
            raise ShapeError(
                f"{self.kind} takes {GATE_ARITY[self.kind]} target(s), got {len(targets)}"
            )
        if len(set(targets)) != len(targets):
            raise ValueError(f"{self.kind} targets must be distinct, got {targets}")
        if any(t < 0 for t in targets):
            raise IndexError(f"negative qubit index in {targets}")
        if self.kind in PARAMETRIC:
            if self.angle is None:
                raise ValueError(f"{self.kind} requires an angle")
            object.__setattr__(self, "angle", float(self.angle))
        elif self.angle is not None:
            raise ValueError(f"{self.kind} takes no angle")

    def __repr__(self):
        tgt = ",".join(map(str, self.targets))
        if self.angle is None:
            return f"{self.kind}[{tgt}]"
        return f"{self.kind}[{tgt}]({self.angle:.6g})"


@dataclass
class StateVector:
    """Pure state of ``n_qubits`` qubits stored as ``2**n_qubits`` complex amplitudes."""

    n_qubits: int
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        _check_n_qubits(self.n_qubits)
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        if amps.shape != (2**self.n_qubits,):
            raise ShapeError(
                f"expected {2**self.n_qubits} amplitudes for {self.n_qubits} qubits, "
                f"got shape {amps.shape}"
            )
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > NORM_ATOL:
            raise ValueError(f"state is not normalized (squared norm {norm!r})")
        self.amplitudes = amps

    @property
    def norm_squared(self):
        return float(np.vdot(self.amplitudes, self.amplitudes).real)


def _check_n_qubits(n_qubits):
    if int(n_qubits) != n_qubits or not 1 <= n_qubits <= MAX_QUBITS:
        raise SizeError(f"n_qubits must be an integer in [1, {MAX_QUBITS}], got {n_qubits!r}")


def n_qubits_of(amps):
    dim = amps.shape[-1]
    n = dim.bit_length() - 1
    if dim != 1 << n or n < 1:
        raise ShapeError(f"amplitude axis of length {dim} is not a power of two")
    return n


def zero_state(n_qubits):
    """Return |0...0> on ``n_qubits`` qubits."""
    _check_n_qubits(n_qubits)
    amps = np.zeros(2**n_qubits, dtype=np.complex128)
    amps[0] = 1.0
    return StateVector(n_qubits, amps)


def zero_amplitudes(n_qubits, batch=None):
    """Raw ``|0...0>`` amplitudes, optionally repeated along a leading batch axis."""
    _check_n_qubits(n_qubits)
    shape = (2**n_qubits,) if batch is None else (batch, 2**n_qubits)
    amps = np.zeros(shape, dtype=np.complex128)
    amps[..., 0] = 1.0
    return amps


@lru_cache(maxsize=None)
def z_signs(n_qubits, qubit):
    """Eigenvalues (+1/-1) of Z on ``qubit`` for every basis index."""
    bits = (np.arange(2**n_qubits) >> qubit) & 1
    out = 1.0 - 2.0 * bits
    out.setflags(write=False)
    return out


@lru_cache(maxsize=None)
def _cnot_permutation(n_qubits, control, target):
    idx = np.arange(2**n_qubits)
    perm = np.where((idx >> control) & 1, idx ^ (1 << target), idx)
    perm.setflags(write=False)
    return perm


def _check_targets(targets, n):
    for t in targets:
        if not 0 <= t < n:
            raise IndexError(f"qubit index {t} out of range for {n} qubits")


def _apply_1q(amps, matrix, qubit, n):
    """Apply a 2x2 ``matrix`` (or per-sample stack ``(B, 2, 2)``) to ``qubit``."""
    lead = amps.shape[:-1]
    view = amps.reshape(lead + (2 ** (n - qubit - 1), 2, 2**qubit))
    if matrix.ndim == 2:
        out = np.einsum("ij,...hjl->...hil", matrix, view)
    else:
        out = np.einsum("bij,bhjl->bhil", matrix, view)
    return out.reshape(amps.shape)


def _ry_matrices(angle):
    half = 0.5 * np.asarray(angle, dtype=np.float64)
    c, s = np.cos(half), np.sin(half)
    mat = np.empty(half.shape + (2, 2), dtype=np.complex128)
    mat[..., 0, 0] = c
    mat[..., 0, 1] = -s
    mat[..., 1, 0] = s
    mat[..., 1, 1] = c
    return mat


def _diagonal_phase(angle, signs):
    angle = np.asarray(angle, dtype=np.float64)
    if angle.ndim == 0:
        return np.exp(-0.5j * angle * signs)
    return np.exp(-0.5j * angle[:, None] * signs[None, :])


def apply_gate_array(amps, kind, targets, angle=None):
    """Apply one gate to raw amplitudes of shape ``(2**n,)`` or ``(B, 2**n)``.

    ``angle`` may be a scalar or, for batched amplitudes, an array of shape ``(B,)``
    giving each sample its own rotation angle. Returns a new array.
    """
    n = n_qubits_of(amps)
    _check_targets(targets, n)
    if kind == "H":
        return _apply_1q(amps, _HADAMARD, targets[0], n)
    if kind == "RY":
        return _apply_1q(amps, _ry_matrices(angle), targets[0], n)
    if kind == "RZ":
        return amps * _diagonal_phase(angle, z_signs(n, targets[0]))
    if kind == "RZZ":
        signs = z_signs(n, targets[0]) * z_signs(n, targets[1])
        return amps * _diagonal_phase(angle, signs)
    if kind == "CNOT":
        return amps[..., _cnot_permutation(n, targets[0], targets[1])]
    raise ValueError(f"unknown gate kind {kind!r}")


def apply_gate_dagger_array(amps, kind, targets, angle=None):
    """Apply the inverse of a gate. H and CNOT are self-inverse; rotations negate."""
    if kind in PARAMETRIC:
        return apply_gate_array(amps, kind, targets, -np.asarray(angle, dtype=np.float64))
    return apply_gate_array(amps, kind, targets)


def apply_pauli_array(amps, pauli, targets):
    """Apply a Pauli string ``"Y"``, ``"Z"`` or ``"ZZ"`` on ``targets``."""
    n = n_qubits_of(amps)
    _check_targets(targets, n)
    if pauli == "Y":
        return _apply_1q(amps, _PAULI_Y, targets[0], n)
    if pauli == "Z":
        return amps * z_signs(n, targets[0])
    if pauli == "ZZ":
        return amps * (z_signs(n, targets[0]) * z_signs(n, targets[1]))
    raise ValueError(f"unsupported Pauli {pauli!r}")


def apply_gate(state, gate):
    """Return a new :class:`StateVector` with ``gate`` applied."""
    _check_targets(gate.targets, state.n_qubits)
    amps = apply_gate_array(state.amplitudes, gate.kind, gate.targets, gate.angle)
    return StateVector(state.n_qubits, amps)


def run_circuit(gates, n_qubits):
    """Apply ``gates`` in order to |0...0>."""
    state = zero_state(n_qubits)
    for gate in gates:
        state = apply_gate(state, gate)
    return state


def expectation_z0_array(amps):
    """<Z> on qubit 0 for raw amplitudes; batched input gives one value per row."""
    n = n_qubits_of(amps)
    probs = amps.real**2 + amps.imag**2
    return probs @ z_signs(n, 0)


def expectation_z0(state):
    """Expectation of Pauli-Z on qubit 0, clipped to [-1, 1] against rounding."""
    value = float(expectation_z0_array(state.amplitudes))
    return min(1.0, max(-1.0, value))
