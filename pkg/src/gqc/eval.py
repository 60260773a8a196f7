"""ROC analysis over test folds and histogram KL divergence of latent features."""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass

import numpy as np
from sklearn.metrics import roc_curve

from .exceptions import DomainError, ShapeError

# Returned by fpr_inverse_at_tpr when no background passes the cut.
INFINITE_REJECTION = math.inf

DEFAULT_GRID = np.linspace(0.0, 1.0, 201)


@dataclass
class RocCurve:
    thresholds: np.ndarray
    tpr: np.ndarray
    fpr: np.ndarray
    auc: float


def _check_scores(scores, labels):
    scores = np.asarray(scores, dtype=np.float64).ravel()
    labels = np.asarray(labels).ravel()
    if scores.shape != labels.shape:
        raise ShapeError(f"{len(scores)} scores but {len(labels)} labels")
    if not np.all((labels == 0) | (labels == 1)):
        raise DomainError("labels must be 0 or 1")
    if labels.min() == labels.max():
        raise DomainError("ROC needs both classes present")
    return scores, labels.astype(np.int64)


def roc(scores, labels):
    """ROC over every distinct score; tied scores form a single step.

    The curve starts at (0, 0) with threshold ``+inf`` and ends at (1, 1).
    """
    scores, labels = _check_scores(scores, labels)
    fpr, tpr, thresholds = roc_curve(labels, scores, drop_intermediate=False)
    return RocCurve(thresholds, tpr, fpr, float(np.trapezoid(tpr, fpr)))


def fpr_inverse_at_tpr(curve, tpr_target=0.8):
    """Background rejection ``1 / FPR`` at the working point ``TPR = tpr_target``.

    FPR is linearly interpolated between the two curve points bracketing the
    target. Returns :data:`INFINITE_REJECTION` when that FPR is zero.
    """
    if not 0.0 < tpr_target <= 1.0:
        raise DomainError(f"tpr_target must be in (0, 1], got {tpr_target}")
    tpr, fpr = curve.tpr, curve.fpr
    i = int(np.argmax(tpr >= tpr_target))
    if tpr[i] == tpr_target or i == 0:
        fpr_at = fpr[i]
    else:
        frac = (tpr_target - tpr[i - 1]) / (tpr[i] - tpr[i - 1])
        fpr_at = fpr[i - 1] + frac * (fpr[i] - fpr[i - 1])
    if fpr_at <= 0.0:
        return INFINITE_REJECTION
    return float(1.0 / fpr_at)


def tpr_on_grid(curve, grid=DEFAULT_GRID):
    """TPR interpolated at each FPR of ``grid``; vertical steps take their top value."""
    fpr, idx = np.unique(curve.fpr[::-1], return_index=True)
    tpr = curve.tpr[::-1][idx]
    return np.interp(grid, fpr, tpr)


def _sample_std(values):
    values = np.asarray(values, dtype=np.float64)
    if len(values) < 2:
        return np.zeros(values.shape[1:]) if values.ndim > 1 else 0.0
    return np.std(values, axis=0, ddof=1)


@dataclass
class FoldSummary:
    auc: list
    fpr_inv: list
    tpr_target: float = 0.8

    @property
    def auc_mean(self):
        return float(np.mean(self.auc))

    @property
    def auc_std(self):
        return float(_sample_std(self.auc))

    @property
    def fpr_inv_mean(self):
        return float(np.mean(self.fpr_inv))

    @property
    def fpr_inv_std(self):
        if any(math.isinf(v) for v in self.fpr_inv):
            return math.nan
        return float(_sample_std(self.fpr_inv))

    def to_json(self):
        def enc(v):
            return None if math.isinf(v) or math.isnan(v) else v

        return {
            "n_folds": len(self.auc),
            "tpr_target": self.tpr_target,
            "auc": list(map(float, self.auc)),
            "auc_mean": self.auc_mean,
            "auc_std": self.auc_std,
            "fpr_inv": [enc(float(v)) for v in self.fpr_inv],
            "fpr_inv_mean": enc(self.fpr_inv_mean),
            "fpr_inv_std": enc(self.fpr_inv_std),
        }


def summarize_folds(curves, tpr_target=0.8):
    """AUC and ``1/FPR`` at ``tpr_target`` for each fold's curve."""
    return FoldSummary(
        [c.auc for c in curves], [fpr_inverse_at_tpr(c, tpr_target) for c in curves], tpr_target
    )


def roc_band(curves, grid=DEFAULT_GRID):
    """Mean TPR and its one-standard-deviation band across folds on a shared FPR grid."""
    tprs = np.array([tpr_on_grid(c, grid) for c in curves])
    return tprs.mean(axis=0), _sample_std(tprs)


def tpr_difference(curves_a, curves_b, grid=DEFAULT_GRID):
    """Fold-paired TPR difference ``a - b`` on ``grid``: ``(mean, std)``."""
    if len(curves_a) != len(curves_b):
        raise ShapeError(f"fold counts differ: {len(curves_a)} vs {len(curves_b)}")
    diffs = np.array([tpr_on_grid(a, grid) - tpr_on_grid(b, grid) for a, b in zip(curves_a, curves_b)])
    return diffs.mean(axis=0), _sample_std(diffs)


def write_roc_csv(path, curve):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["threshold", "fpr", "tpr"])
        for t, f, p in zip(curve.thresholds, curve.fpr, curve.tpr):
            writer.writerow([repr(float(t)), repr(float(f)), repr(float(p))])


def read_roc_csv(path):
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    thresholds, fpr, tpr = data[:, 0], data[:, 1], data[:, 2]
    return RocCurve(thresholds, tpr, fpr, float(np.trapezoid(tpr, fpr)))


# -- KL divergence -------------------------------------------------------------------


def kld_binned(p_samples, q_samples, n_bins=60, value_range=(0.0, 1.0)):
    """``sum_k P_k ln(P_k / Q_k)`` over shared histogram bins (nats).

    Samples are clipped into ``value_range``. Bins with ``P_k = 0`` contribute
    nothing; where ``P_k > 0`` but ``Q_k = 0``, ``Q_k`` is floored at
    ``1 / (10 * max(len(p), len(q)))``. Any such ``P_k`` is at least ten times
    the floor, which keeps the result non-negative.
    """
    p = np.asarray(p_samples, dtype=np.float64).ravel()
    q = np.asarray(q_samples, dtype=np.float64).ravel()
    if p.size == 0 or q.size == 0:
        raise DomainError("KL divergence needs non-empty sample sets")
    lo, hi = value_range
    if not lo < hi:
        raise DomainError(f"empty histogram range ({lo}, {hi})")
    edges = np.linspace(lo, hi, n_bins + 1)
    P = np.histogram(np.clip(p, lo, hi), edges)[0] / p.size
    Q = np.histogram(np.clip(q, lo, hi), edges)[0] / q.size
    floor = 1.0 / (10.0 * max(p.size, q.size))
    mask = P > 0
    Qm = np.where(Q[mask] > 0, Q[mask], floor)
    return float(np.sum(P[mask] * np.log(P[mask] / Qm)))


def latent_kld(Z, labels, n_bins=60, value_range=(0.0, 1.0)):
    """Per-feature ``D_KL(signal || background)`` of latent codes ``Z``."""
    Z = np.asarray(Z, dtype=np.float64)
    labels = np.asarray(labels).ravel()
    sig, bkg = Z[labels == 1], Z[labels == 0]
    return np.array(
        [kld_binned(sig[:, i], bkg[:, i], n_bins, value_range) for i in range(Z.shape[1])]
    )


def separation_ratio(kld_num, kld_den):
    """Mean of per-feature ratios; features with zero denominator are dropped.

    Returns ``(ratio or None, n_excluded)``.
    """
    kld_num = np.asarray(kld_num, dtype=np.float64)
    kld_den = np.asarray(kld_den, dtype=np.float64)
    if kld_num.shape != kld_den.shape:
        raise ShapeError("per-feature divergences must have equal length")
    ok = kld_den > 0
    excluded = int(np.sum(~ok))
    if excluded:
        warnings.warn(f"{excluded} latent feature(s) with zero reference divergence excluded")
    if not ok.any():
        return None, excluded
    return float(np.mean(kld_num[ok] / kld_den[ok])), excluded


def latent_separation_report(latents, n_bins=60, value_range=(0.0, 1.0), ratio=None):
    """Per-feature divergences for each named model and, optionally, their ratio.

    ``latents`` maps a model name to ``(Z, labels)``; ``ratio=(num, den)`` names
    the two models whose per-feature ratio is averaged.
    """
    report = {"n_bins": n_bins, "range": list(value_range), "kld": {}}
    for name, (Z, labels) in latents.items():
        report["kld"][name] = latent_kld(Z, labels, n_bins, value_range).tolist()
    if ratio is not None:
        num, den = ratio
        value, excluded = separation_ratio(report["kld"][num], report["kld"][den])
        report["ratio"] = {"numerator": num, "denominator": den, "R": value, "excluded": excluded}
    return report
