import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gqc import eval as ev
from gqc.exceptions import DomainError, ShapeError

from .oracles import mann_whitney_auc

KLD_EXAMPLE = 0.5 * math.log(2) + 0.5 * math.log(2 / 3)


def test_auc_examples():
    s = [0.9, 0.8, 0.3, 0.1]
    assert ev.roc(s, [1, 1, 0, 0]).auc == 1.0
    assert ev.roc(s, [0, 0, 1, 1]).auc == 0.0
    assert ev.roc([0.7, 0.6, 0.5, 0.4], [1, 0, 1, 0]).auc == pytest.approx(0.75, abs=1e-15)


def test_roc_curve_shape():
    curve = ev.roc([0.7, 0.6, 0.5, 0.4], [1, 0, 1, 0])
    np.testing.assert_array_equal(curve.fpr, [0, 0, 0.5, 0.5, 1])
    np.testing.assert_array_equal(curve.tpr, [0, 0.5, 0.5, 1, 1])
    assert np.all(np.diff(curve.thresholds) < 0)


def test_roc_ties_form_one_step():
    curve = ev.roc([0.5, 0.5, 0.5, 0.5], [1, 0, 1, 0])
    np.testing.assert_array_equal(curve.fpr, [0, 1])
    assert curve.auc == 0.5


def test_roc_guards():
    with pytest.raises(DomainError):
        ev.roc([0.1, 0.2], [1, 1])
    with pytest.raises(ShapeError):
        ev.roc([0.1, 0.2], [1, 0, 1])
    with pytest.raises(DomainError):
        ev.roc([0.1, 0.2], [2, 0])


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 200), st.integers(0, 2**32 - 1), st.booleans())
def test_auc_matches_pair_counting(m, seed, coarse):
    rng = np.random.default_rng(seed)
    labels = np.arange(m) % 2
    rng.shuffle(labels)
    scores = rng.integers(0, 5, m) / 4 if coarse else rng.uniform(size=m)
    curve = ev.roc(scores, labels)
    assert abs(curve.auc - mann_whitney_auc(scores, labels)) <= 1e-12
    assert np.all(np.diff(curve.tpr) >= 0) and np.all(np.diff(curve.fpr) >= 0)
    assert (curve.fpr[0], curve.tpr[0], curve.fpr[-1], curve.tpr[-1]) == (0, 0, 1, 1)


def test_fpr_inverse_perfect_is_sentinel():
    curve = ev.roc([0.9, 0.8, 0.3, 0.1], [1, 1, 0, 0])
    assert ev.fpr_inverse_at_tpr(curve, 0.8) == ev.INFINITE_REJECTION == math.inf


def test_fpr_inverse_hand_example():
    # the target 0.8 falls between (0.5, 0.5) and (0.5, 1.0); FPR = 0.5 there
    curve = ev.roc([0.7, 0.6, 0.5, 0.4], [1, 0, 1, 0])
    assert ev.fpr_inverse_at_tpr(curve, 0.8) == 2.0


def test_fpr_inverse_interpolates():
    curve = ev.RocCurve(np.array([np.inf, 1, 0]), np.array([0, 0.5, 1.0]), np.array([0, 0.2, 1.0]), 0)
    # halfway from tpr 0.5 to 1.0 -> fpr 0.2 + 0.6 * 0.8 = 0.68
    assert ev.fpr_inverse_at_tpr(curve, 0.8) == pytest.approx(1 / 0.68, abs=1e-12)


def test_fpr_inverse_random_scores():
    rng = np.random.default_rng(0)
    labels = np.arange(200000) % 2
    curve = ev.roc(rng.uniform(size=len(labels)), labels)
    assert ev.fpr_inverse_at_tpr(curve, 0.8) == pytest.approx(1.25, abs=0.01)


@pytest.mark.parametrize("target", [0.0, 1.1])
def test_fpr_inverse_domain(target):
    with pytest.raises(DomainError):
        ev.fpr_inverse_at_tpr(ev.roc([0.1, 0.2], [0, 1]), target)


def test_fold_summary_identical_folds():
    curve = ev.roc([0.7, 0.6, 0.5, 0.4], [1, 0, 1, 0])
    summary = ev.summarize_folds([curve] * 5)
    assert summary.auc_std == 0.0 and summary.fpr_inv_std == 0.0
    assert summary.auc_mean == 0.75
    obj = summary.to_json()
    assert obj["n_folds"] == 5 and len(obj["auc"]) == 5


def test_fold_summary_sample_std_and_sentinel():
    summary = ev.FoldSummary([0.7, 0.8, 0.9], [2.0, math.inf, 3.0])
    assert summary.auc_std == pytest.approx(0.1, abs=1e-12)
    obj = summary.to_json()
    assert obj["fpr_inv"] == [2.0, None, 3.0]
    assert obj["fpr_inv_mean"] is None and obj["fpr_inv_std"] is None


def test_roc_band_and_difference():
    rng = np.random.default_rng(1)
    labels = np.arange(100) % 2
    curves = [ev.roc(rng.uniform(size=100) + 0.3 * labels, labels) for _ in range(4)]
    mean, std = ev.roc_band(curves)
    assert mean.shape == std.shape == ev.DEFAULT_GRID.shape
    assert mean[0] >= 0 and mean[-1] == 1.0
    diff_mean, diff_std = ev.tpr_difference(curves, curves)
    np.testing.assert_array_equal(diff_mean, 0.0)
    np.testing.assert_array_equal(diff_std, 0.0)
    with pytest.raises(ShapeError):
        ev.tpr_difference(curves, curves[:3])


def test_tpr_on_grid_takes_top_of_vertical_step():
    curve = ev.roc([0.7, 0.6, 0.5, 0.4], [1, 0, 1, 0])
    np.testing.assert_array_equal(ev.tpr_on_grid(curve, np.array([0.0, 0.5, 0.75])), [0.5, 1.0, 1.0])


def test_roc_csv_roundtrip(tmp_path):
    curve = ev.roc([0.7, 0.6, 0.5, 0.4], [1, 0, 1, 0])
    path = tmp_path / "roc.csv"
    ev.write_roc_csv(path, curve)
    assert path.read_text().splitlines()[0] == "threshold,fpr,tpr"
    back = ev.read_roc_csv(path)
    np.testing.assert_array_equal(back.fpr, curve.fpr)
    np.testing.assert_array_equal(back.tpr, curve.tpr)
    assert back.auc == curve.auc


def test_kld_examples():
    x = np.random.default_rng(0).uniform(size=50)
    assert ev.kld_binned(x, x) == 0.0
    p, q = [0.25, 0.75], [0.1, 0.6, 0.7, 0.8]
    assert abs(ev.kld_binned(p, q, n_bins=2) - KLD_EXAMPLE) <= 1e-12
    assert KLD_EXAMPLE == pytest.approx(0.1438, abs=1e-4)
    assert ev.kld_binned([0.1, 0.2], [0.1, 0.9], n_bins=2) == pytest.approx(math.log(2), abs=1e-12)


def test_kld_floor_when_q_bin_empty():
    # P=(0.5, 0.5), Q=(1, 0): the empty Q bin is floored at 1/(10*2)
    value = ev.kld_binned([0.1, 0.9], [0.1, 0.2], n_bins=2)
    assert value == pytest.approx(0.5 * math.log(0.5) + 0.5 * math.log(0.5 / 0.05), abs=1e-12)


def test_kld_guards():
    with pytest.raises(DomainError):
        ev.kld_binned([], [0.5])
    with pytest.raises(DomainError):
        ev.kld_binned([0.5], [0.5], value_range=(1, 1))


@settings(max_examples=80, deadline=None)
@given(st.integers(1, 60), st.integers(1, 60), st.integers(1, 20), st.integers(0, 2**32 - 1))
def test_kld_non_negative(n_p, n_q, n_bins, seed):
    rng = np.random.default_rng(seed)
    p = rng.beta(0.5, 2.0, n_p)
    q = rng.beta(2.0, 0.5, n_q)
    assert ev.kld_binned(p, q, n_bins) >= 0.0


def test_latent_report_degenerate_warns():
    Z = np.full((10, 3), 0.4)
    labels = np.arange(10) % 2
    with pytest.warns(UserWarning, match="excluded"):
        report = ev.latent_separation_report({"a": (Z, labels), "b": (Z, labels)}, ratio=("a", "b"))
    assert report["kld"]["a"] == [0.0, 0.0, 0.0]
    assert report["ratio"]["R"] is None and report["ratio"]["excluded"] == 3


def test_latent_ratio_separated_vs_overlapping():
    rng = np.random.default_rng(3)
    labels = np.arange(4000) % 2
    shift = np.where(labels == 1, 0.3, -0.3)[:, None]
    separated = np.clip(0.5 + shift + rng.normal(0, 0.08, (4000, 4)), 0, 1)
    overlapping = np.clip(0.5 + 0.1 * shift + rng.normal(0, 0.08, (4000, 4)), 0, 1)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        report = ev.latent_separation_report(
            {"sep": (separated, labels), "ovl": (overlapping, labels)}, ratio=("sep", "ovl")
        )
    assert report["ratio"]["R"] > 10
    assert report["ratio"]["excluded"] == 0


def test_separation_ratio_shape_mismatch():
    with pytest.raises(ShapeError):
        ev.separation_ratio([1.0, 2.0], [1.0])
