"""Exact circuit gradients for the classifier circuit.

:func:`adjoint_gradient_batch` does one forward sweep and one reverse sweep
over the gate list, returning derivatives of ``<Z_0>`` with respect to every
trainable angle and every latent feature. Latent features enter through RZ
angles ``z_j`` and RZZ angles ``(pi - z_j)(pi - z_k)``; their derivatives are
chain-ruled analytically.

:func:`parameter_shift_gradient` evaluates the same derivatives by re-running
the circuit with shifted gate angles and is used as an independent check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import qsim
from .vqc import bind_angles, check_batch, check_theta, circuit_template, _check_z

SHIFT = np.pi / 2


@dataclass
class GradientTape:
    """Derivatives of the circuit output for a single sample."""

    d_theta: np.ndarray
    d_z: np.ndarray
    n_applications: int = 0


def _gate_gradients(ops, angles, n_qubits, batch):
    """Adjoint sweep. Returns ``(values, per-gate grads (B, G), applications)``.

    Gate ``g`` rotates by ``exp(-i a P / 2)``; with ``psi`` and ``lam`` both
    taken right after gate ``g``, ``d<M>/da = Im <lam|P|psi>``.
    """
    n_ops = len(ops)
    psi = qsim.zero_amplitudes(n_qubits, batch)
    for op, angle in zip(ops, angles):
        psi = qsim.apply_gate_array(psi, op.kind, op.targets, angle)
    lam = qsim.apply_pauli_array(psi, "Z", (0,))
    applications = n_ops + 1
    values = np.einsum("bi,bi->b", psi.conj(), lam).real

    grads = np.zeros((batch, n_ops))
    for g in range(n_ops - 1, -1, -1):
        op, angle = ops[g], angles[g]
        if op.source is not None:
            mu = qsim.apply_pauli_array(psi, qsim.GENERATOR[op.kind], op.targets)
            grads[:, g] = np.einsum("bi,bi->b", lam.conj(), mu).imag
            applications += 1
        if g > 0:
            psi = qsim.apply_gate_dagger_array(psi, op.kind, op.targets, angle)
            lam = qsim.apply_gate_dagger_array(lam, op.kind, op.targets, angle)
            applications += 2
    return values, grads, applications


def _scatter(ops, grads, Z, n_params):
    """Map per-gate angle derivatives onto trainable angles and latent features."""
    batch, latent_dim = Z.shape
    d_theta = np.zeros((batch, n_params))
    d_z = np.zeros((batch, latent_dim))
    for g, op in enumerate(ops):
        src = op.source
        if src is None:
            continue
        if src[0] == "theta":
            d_theta[:, src[1]] += grads[:, g]
        elif src[0] == "z":
            d_z[:, src[1]] += grads[:, g]
        else:
            j, k = src[1], src[2]
            d_z[:, j] -= grads[:, g] * (np.pi - Z[:, k])
            d_z[:, k] -= grads[:, g] * (np.pi - Z[:, j])
    return d_theta, d_z


def adjoint_gradient_batch(Z, theta, cfg):
    """Outputs and exact gradients for a batch.

    Returns ``(values (B,), d_theta (B, n_params), d_z (B, latent_dim), applications)``
    where ``d_theta`` uses the flattened trainable-angle layout.
    """
    Z = check_batch(Z, cfg)
    theta = check_theta(theta, cfg)
    ops = circuit_template(cfg)
    angles = bind_angles(ops, Z, theta.ravel())
    values, grads, applications = _gate_gradients(ops, angles, cfg.n_qubits, len(Z))
    d_theta, d_z = _scatter(ops, grads, Z, cfg.n_params)
    return np.clip(values, -1.0, 1.0), d_theta, d_z, applications


def adjoint_gradient(z, theta, cfg):
    """Circuit output and its :class:`GradientTape` for a single latent vector."""
    z = _check_z(z, cfg)
    values, d_theta, d_z, applications = adjoint_gradient_batch(z[None, :], theta, cfg)
    tape = GradientTape(d_theta[0].reshape(cfg.theta_shape), d_z[0], applications)
    return float(values[0]), tape


def _shifted_output(ops, angles, n_qubits, g, delta):
    shifted = list(angles)
    shifted[g] = shifted[g] + delta
    amps = qsim.zero_amplitudes(n_qubits, 1)
    for op, angle in zip(ops, shifted):
        amps = qsim.apply_gate_array(amps, op.kind, op.targets, angle)
    return float(qsim.expectation_z0_array(amps)[0])


def _shift_rule(ops, angles, n_qubits, g):
    plus = _shifted_output(ops, angles, n_qubits, g, SHIFT)
    minus = _shifted_output(ops, angles, n_qubits, g, -SHIFT)
    return 0.5 * (plus - minus)


def _bound(z, theta, cfg):
    z = _check_z(z, cfg)
    theta = check_theta(theta, cfg)
    ops = circuit_template(cfg)
    return z, ops, bind_angles(ops, z[None, :], theta.ravel())


def parameter_shift_gradient(z, theta, cfg, which):
    """Derivative with respect to flat trainable angle ``which`` by the two-term shift rule."""
    if not 0 <= which < cfg.n_params:
        raise IndexError(f"trainable angle index {which} out of range [0, {cfg.n_params})")
    z, ops, angles = _bound(z, theta, cfg)
    g = next(i for i, op in enumerate(ops) if op.source == ("theta", which))
    return _shift_rule(ops, angles, cfg.n_qubits, g)


def parameter_shift_input_gradient(z, theta, cfg, feature):
    """Derivative with respect to latent feature ``feature``.

    Every gate whose angle depends on the feature is shifted on its own and the
    results are combined with the analytic derivative of that gate's angle.
    """
    if not 0 <= feature < cfg.latent_dim:
        raise IndexError(f"latent feature index {feature} out of range [0, {cfg.latent_dim})")
    z, ops, angles = _bound(z, theta, cfg)
    total = 0.0
    for g, op in enumerate(ops):
        src = op.source
        if src is None or src[0] == "theta" or feature not in src[1:]:
            continue
        if src[0] == "z":
            d_angle = 1.0
        else:
            other = src[2] if src[1] == feature else src[1]
            d_angle = -(np.pi - z[other])
        total += d_angle * _shift_rule(ops, angles, cfg.n_qubits, g)
    return total
