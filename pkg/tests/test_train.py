import time

import numpy as np
import pytest

from gqc import models, nn, train, vqc
from gqc.data import Dataset
from gqc.exceptions import ConfigError, TrainingError
from gqc.train import TrainConfig
from gqc.vqc import VqcConfig

MICRO = VqcConfig(n_qubits=2, segments=2, reps=1)


def _blobs(m, d=2, seed=0, gap=3.0):
    rng = np.random.default_rng(seed)
    y = np.arange(m) % 2
    X = rng.normal(size=(m, d)) + gap * (y[:, None] - 0.5)
    X = (X - X.min(0)) / (X.max(0) - X.min(0))
    return Dataset(X, y)


def _micro_data(m=200, seed=0):
    rng = np.random.default_rng(seed)
    y = np.arange(m) % 2
    X = np.clip(rng.normal(0.5, 0.15, (m, 6)) + 0.2 * (y[:, None] - 0.5), 0, 1)
    return Dataset(X, y)


def test_classical_loss_decreases_on_separable_blobs():
    tr, va = _blobs(400), _blobs(100, seed=1)
    cfg = TrainConfig.for_paradigm("classical", epochs=5, learning_rate=1e-2, batch_size=32)
    _, record = train.train_classical(cfg, tr, va)
    assert np.all(np.diff(record.train_loss) < 1e-3)
    assert record.train_loss[-1] < record.train_loss[0]


def test_zero_epochs():
    tr, va = _blobs(50), _blobs(20, seed=1)
    cfg = TrainConfig.for_paradigm("classical", epochs=0)
    net, record = train.train_classical(cfg, tr, va)
    fresh = models.build_classical(2, (16,), np.random.default_rng([0, 0]))
    assert all(np.array_equal(a, b) for a, b in zip(net.parameters(), fresh.parameters()))
    assert record.train_loss == [] and record.selected_epoch is None


def test_classical_deterministic():
    tr, va = _blobs(200), _blobs(50, seed=1)
    cfg = TrainConfig.for_paradigm("classical", epochs=3, seed=11)
    a_net, a = train.train_classical(cfg, tr, va)
    b_net, b = train.train_classical(cfg, tr, va)
    assert a.train_loss == b.train_loss and a.val_loss == b.val_loss
    assert all(np.array_equal(p, q) for p, q in zip(a_net.parameters(), b_net.parameters()))


def test_selected_model_reproduces_recorded_minimum():
    tr, va = _blobs(200), _blobs(60, seed=1)
    cfg = TrainConfig.for_paradigm("classical", epochs=6, learning_rate=0.1, batch_size=16)
    net, record = train.train_classical(cfg, tr, va)
    candidates = [record.initial_val_loss] + record.val_loss
    assert record.best_val_loss == min(candidates)
    assert candidates.index(min(candidates)) == record.selected_epoch
    assert nn.bce_loss(va.labels, models.classical_forward(net, va.features)) == record.best_val_loss


def test_gqc_selection_invariant():
    tr, va = _micro_data(), _micro_data(60, seed=1)
    cfg = TrainConfig(paradigm="gqc", vqc=MICRO, epochs=4, batch_size=32)
    model, record = train.train_gqc(cfg, tr, va)
    assert models.gqc_loss(model, va.features, va.labels)[0] == record.best_val_loss
    assert record.best_val_loss == min([record.initial_val_loss] + record.val_loss)
    for parts, total in zip(record.val_parts, record.val_loss):
        assert total == models.combine_losses(parts["recon"], parts["class"], 0.7)


def test_two_step_freezes_autoencoder():
    tr, va = _micro_data(), _micro_data(60, seed=1)
    cfg = TrainConfig(
        paradigm="two_step", vqc=MICRO, epochs=3, batch_size=32,
        ae_hidden=(5,), ae_epochs=3, ae_batch_size=32,
    )
    model, (ae_rec, vqc_rec) = train.train_two_step(cfg, tr, va)
    assert ae_rec.best_val_loss <= ae_rec.initial_val_loss
    Z, X_hat = models.ae_forward(model.autoencoder, va.features)
    assert nn.mse_loss(va.features, X_hat) == ae_rec.best_val_loss
    assert len(vqc_rec.val_loss) == 3

    # retraining only the circuit must leave the autoencoder untouched bitwise
    before = [p.copy() for p in model.autoencoder.encoder.parameters()]
    Z = model.autoencoder.encoder(tr.features)
    train.train_vqc(Z, tr.labels, Z[:20], tr.labels[:20], MICRO, model.theta, 32, 1e-2, 2, 0)
    after = model.autoencoder.encoder.parameters()
    assert all(a.tobytes() == b.tobytes() for a, b in zip(before, after))


def test_two_step_circuit_sees_frozen_latents():
    tr, va = _micro_data(), _micro_data(60, seed=1)
    cfg = TrainConfig(paradigm="two_step", vqc=MICRO, epochs=2, batch_size=64, ae_hidden=(), ae_epochs=2)
    model, (_, vqc_rec) = train.train_two_step(cfg, tr, va)
    Z_val = model.autoencoder.encoder(va.features)
    prob = vqc.expectation_to_probability(vqc.forward_batch(Z_val, model.theta, MICRO))
    assert nn.bce_loss(va.labels, prob) == vqc_rec.best_val_loss


def test_tuned_defaults():
    gqc = TrainConfig()
    assert (gqc.batch_size, gqc.learning_rate, gqc.vqc.reps, gqc.lam) == (1024, 1e-2, 2, 0.7)
    two = TrainConfig(paradigm="two_step")
    assert (two.ae_batch_size, two.ae_learning_rate) == (128, 0.0012)
    assert two.ae_hidden == (64, 44, 32, 24)


@pytest.mark.parametrize(
    "kwargs, field",
    [
        ({"lam": 1.0}, "lambda"),
        ({"paradigm": "svm"}, "paradigm"),
        ({"batch_size": 0}, "batch_size"),
        ({"learning_rate": 0.0}, "learning_rate"),
        ({"epochs": -1}, "epochs"),
    ],
)
def test_config_validation(kwargs, field):
    with pytest.raises(ConfigError) as info:
        TrainConfig(**kwargs)
    assert info.value.field == field


def test_paradigm_mismatch():
    with pytest.raises(ConfigError):
        train.train_gqc(TrainConfig(paradigm="classical"), _blobs(10), _blobs(10))


def test_lambda_near_one_runs():
    tr, va = _micro_data(), _micro_data(60, seed=1)
    cfg = TrainConfig(paradigm="gqc", vqc=MICRO, epochs=3, batch_size=50, lam=0.999)
    _, record = train.train_gqc(cfg, tr, va)
    assert len(record.train_parts) == 3
    assert all(np.isfinite(p["recon"]) and np.isfinite(p["class"]) for p in record.train_parts)


def test_micro_config_runtime():
    tr, va = _micro_data(200), _micro_data(60, seed=1)
    cfg = TrainConfig(paradigm="gqc", vqc=MICRO, epochs=10, batch_size=32)
    start = time.perf_counter()
    train.train_gqc(cfg, tr, va)
    assert time.perf_counter() - start < 60.0


def test_non_finite_loss_reports_epoch():
    bad = Dataset(np.array([[np.inf, 0.0], [0.0, 1.0]]), [0, 1])
    cfg = TrainConfig.for_paradigm("classical", epochs=2)
    with pytest.raises(TrainingError) as info, np.errstate(invalid="ignore"):
        train.train_classical(cfg, bad, _blobs(4))
    assert info.value.epoch == 1


@pytest.mark.parametrize("m, b", [(10, 3), (16, 4), (5, 100)])
def test_epoch_batches_cover_once(m, b):
    batches = train.epoch_batches(m, b, seed=2, epoch=3)
    flat = np.concatenate(batches)
    assert sorted(flat.tolist()) == list(range(m))
    assert all(len(x) == b for x in batches[:-1])
    assert not np.array_equal(flat, np.concatenate(train.epoch_batches(m, b, seed=2, epoch=4))) or m < 3


def test_record_csv(tmp_path):
    tr, va = _micro_data(40), _micro_data(20, seed=1)
    _, record = train.train_gqc(TrainConfig(vqc=MICRO, epochs=2, batch_size=20), tr, va)
    path = tmp_path / "log.csv"
    record.write_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "epoch,train_loss,val_loss,train_class,train_recon,val_class,val_recon,selected"
    assert len(lines) == 3
    flagged = sum(int(line.rsplit(",", 1)[1]) for line in lines[1:])
    assert flagged == (record.selected_epoch > 0)


def test_grid_search_sequential_log():
    tr, va = _blobs(60), _blobs(30, seed=1)
    base = TrainConfig.for_paradigm("classical", epochs=1)
    axes = [("batch", [16, 32]), ("lr", [1e-3, 1e-2, 1e-1])]
    best, trials = train.grid_search(axes, base, tr, va)
    assert len(trials) == 5
    assert [t["axis"] for t in trials] == ["batch_size"] * 2 + ["learning_rate"] * 3
    assert best.batch_size in (16, 32) and best.learning_rate in (1e-3, 1e-2, 1e-1)
    first = max(trials[:2], key=lambda t: t["val_accuracy"])
    assert all(t["value"] != first["value"] or t is first for t in trials[:2])


def test_grid_search_single_candidates():
    tr, va = _blobs(40), _blobs(20, seed=1)
    base = TrainConfig(paradigm="gqc", vqc=VqcConfig(2, 1, 1), epochs=1, batch_size=20)
    axes = [("batch", [20]), ("lr", [1e-2]), ("r", [1]), ("lambda", [0.5])]
    best, trials = train.grid_search(axes, base, tr, va)
    assert len(trials) == 4
    assert (best.batch_size, best.learning_rate, best.vqc.reps, best.lam) == (20, 1e-2, 1, 0.5)


def test_grid_search_empty_axis():
    with pytest.raises(ConfigError):
        train.grid_search([("lr", [])], TrainConfig.for_paradigm("classical"), _blobs(4), _blobs(4))


def test_default_grid_axes():
    axes = dict(train.GRID_AXES)
    assert axes["batch_size"] == (128, 256, 512, 1024, 2048)
    assert axes["learning_rate"] == (1e-3, 1e-2, 1e-1)
    assert axes["reps"] == (2, 4, 8)
    np.testing.assert_allclose(axes["lam"], np.arange(3, 10) / 10)
    assert sum(len(v) for v in axes.values()) == 18
