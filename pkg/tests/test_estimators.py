import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.model_selection import cross_val_score
from sklearn.pipeline import make_pipeline
from sklearn.preprocessing import StandardScaler

from gqc import ClassicalClassifier, GQCClassifier, TwoStepClassifier

SMALL = {
    GQCClassifier: dict(n_qubits=2, segments=2, reps=1, batch_size=32, epochs=3),
    TwoStepClassifier: dict(n_qubits=2, segments=2, reps=1, ae_hidden=(5,), ae_epochs=2,
                            ae_batch_size=32, batch_size=32, epochs=2),
    ClassicalClassifier: dict(hidden=(8,), batch_size=32, learning_rate=1e-2, epochs=5),
}


def _toy(m=200, seed=0):
    rng = np.random.default_rng(seed)
    y = np.arange(m) % 2
    X = rng.normal(size=(m, 5)) + 1.5 * y[:, None]
    return X, y


@pytest.mark.parametrize("cls", list(SMALL))
def test_fit_predict_contract(cls):
    X, y = _toy()
    clf = cls(**SMALL[cls]).fit(X, y)
    proba = clf.predict_proba(X)
    assert proba.shape == (len(X), 2)
    np.testing.assert_allclose(proba.sum(axis=1), 1.0)
    assert set(np.unique(clf.predict(X))) <= {0, 1}
    assert clf.n_features_in_ == 5
    np.testing.assert_array_equal(clf.classes_, [0, 1])


@pytest.mark.parametrize("cls", list(SMALL))
def test_get_params_and_clone(cls):
    clf = cls(**SMALL[cls])
    params = clf.get_params()
    for k, v in SMALL[cls].items():
        assert params[k] == v
    twin = clone(clf)
    assert twin.get_params() == params
    assert not hasattr(twin, "model_")


def test_string_labels_roundtrip():
    X, y = _toy()
    labels = np.where(y == 1, "signal", "background")
    clf = ClassicalClassifier(**SMALL[ClassicalClassifier]).fit(X, labels)
    assert set(clf.predict(X)) <= {"signal", "background"}
    assert clf.score(X, labels) > 0.7


@pytest.mark.parametrize("cls", [GQCClassifier, TwoStepClassifier])
def test_transform_and_decision(cls):
    X, y = _toy()
    clf = cls(**SMALL[cls]).fit(X, y)
    Z = clf.transform(X)
    assert Z.shape == (len(X), 4)
    assert np.all((Z >= 0) & (Z <= 1))
    f = clf.decision_function(X)
    assert np.all(np.abs(f) <= 1)
    np.testing.assert_array_equal(clf.predict(X), (f >= 0).astype(int))


def test_classical_has_no_transform():
    assert not hasattr(ClassicalClassifier(), "transform")


def test_gqc_learns_toy():
    X, y = _toy(400)
    clf = GQCClassifier(n_qubits=2, segments=2, reps=1, batch_size=32, epochs=15).fit(X, y)
    assert clf.score(X, y) > 0.7


def test_deterministic_fit():
    X, y = _toy()
    a = GQCClassifier(**SMALL[GQCClassifier]).fit(X, y).predict_proba(X)
    b = GQCClassifier(**SMALL[GQCClassifier]).fit(X, y).predict_proba(X)
    assert a.tobytes() == b.tobytes()


def test_pipeline_and_cross_validation():
    X, y = _toy(300)
    pipe = make_pipeline(StandardScaler(), ClassicalClassifier(**SMALL[ClassicalClassifier]))
    scores = cross_val_score(pipe, X, y, cv=3)
    assert scores.shape == (3,) and np.all(scores > 0.6)


def test_validation_errors():
    X, y = _toy()
    clf = ClassicalClassifier(**SMALL[ClassicalClassifier])
    with pytest.raises(NotFittedError):
        clf.predict(X)
    with pytest.raises(ValueError):
        clf.fit(X, np.arange(len(X)) % 3)
    with pytest.raises(ValueError):
        clf.fit(X, np.linspace(0, 1, len(X)))
    clf.fit(X, y)
    with pytest.raises(ValueError):
        clf.predict(X[:, :4])
    with pytest.raises(ValueError):
        clf.fit(np.where(X > 0, np.nan, X), y)
