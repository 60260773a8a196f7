"""scikit-learn compatible classifiers for the three training paradigms.

All three follow the usual ``fit`` / ``predict`` / ``predict_proba`` contract
and expose their hyperparameters through ``get_params``. A stratified slice of
the training data (``validation_fraction``) is held out for best-epoch
selection, and features are min-max scaled with statistics fitted on the
remaining training part.

>>> from gqc.estimators import GQCClassifier
>>> clf = GQCClassifier(n_qubits=2, segments=2, reps=1, epochs=5, batch_size=64)
>>> clf.fit(X, y).predict_proba(X_test)  # doctest: +SKIP
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.model_selection import train_test_split
from sklearn.utils.multiclass import check_classification_targets
from sklearn.utils.validation import check_is_fitted, validate_data

from . import data, models, train, vqc
from .models import DEEP_HIDDEN
from .vqc import VqcConfig


class _BinaryClassifierBase(ClassifierMixin, BaseEstimator):
    """Input validation, label encoding, scaling and the validation hold-out."""

    def _prepare_fit(self, X, y):
        X, y = validate_data(self, X, y, dtype=np.float64)
        check_classification_targets(y)
        self.classes_ = np.unique(y)
        if len(self.classes_) != 2:
            raise ValueError(f"binary classification needs exactly 2 classes, got {len(self.classes_)}")
        y01 = (y == self.classes_[1]).astype(np.int64)
        X_tr, X_va, y_tr, y_va = train_test_split(
            X, y01, test_size=self.validation_fraction, stratify=y01,
            random_state=self.random_state,
        )
        train_ds = data.Dataset(X_tr, y_tr)
        if self.normalize:
            train_ds, self.scaler_ = data.normalize(train_ds)
        else:
            self.scaler_ = None
        return train_ds, self._scale(data.Dataset(X_va, y_va))

    def _scale(self, ds):
        return ds if self.scaler_ is None else data.normalize(ds, self.scaler_)[0]

    def _features(self, X):
        check_is_fitted(self, "model_")
        X = validate_data(self, X, dtype=np.float64, reset=False)
        if self.scaler_ is None:
            return X
        return self._scale(data.Dataset(X, np.zeros(len(X), dtype=np.int64))).features

    def _seed(self):
        return 0 if self.random_state is None else int(self.random_state)

    def predict_proba(self, X):
        p1 = models.model_scores(self.model_, self._features(X))
        return np.column_stack([1.0 - p1, p1])

    def predict(self, X):
        check_is_fitted(self, "model_")
        return self.classes_[(self.predict_proba(X)[:, 1] >= 0.5).astype(np.int64)]


class _LatentMixin(TransformerMixin):
    def transform(self, X):
        """Latent codes produced by the encoder, shape ``(n_samples, n_qubits * segments)``."""
        return models.model_latents(self.model_, self._features(X))

    def decision_function(self, X):
        """Raw circuit output <Z_0> in [-1, 1]; positive means the second class."""
        Z = self.transform(X)
        return vqc.forward_batch(Z, self.model_.theta, self.model_.vqc_config)

    def predict(self, X):
        check_is_fitted(self, "model_")
        return self.classes_[vqc.predict(self.decision_function(X))]


class GQCClassifier(_LatentMixin, _BinaryClassifierBase):
    """Autoencoder and circuit trained jointly on ``(1 - lam) * MSE + lam * BCE``."""

    def __init__(
        self,
        n_qubits=8,
        segments=2,
        reps=2,
        lam=0.7,
        hidden=(),
        batch_size=1024,
        learning_rate=1e-2,
        epochs=20,
        validation_fraction=0.1,
        normalize=True,
        random_state=0,
    ):
        self.n_qubits = n_qubits
        self.segments = segments
        self.reps = reps
        self.lam = lam
        self.hidden = hidden
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.validation_fraction = validation_fraction
        self.normalize = normalize
        self.random_state = random_state

    def fit(self, X, y):
        train_ds, val_ds = self._prepare_fit(X, y)
        cfg = train.TrainConfig(
            paradigm="gqc",
            batch_size=self.batch_size,
            learning_rate=self.learning_rate,
            epochs=self.epochs,
            lam=self.lam,
            vqc=VqcConfig(self.n_qubits, self.segments, self.reps),
            seed=self._seed(),
            gqc_hidden=tuple(self.hidden),
        )
        self.model_, self.record_ = train.train_gqc(cfg, train_ds, val_ds)
        return self


class TwoStepClassifier(_LatentMixin, _BinaryClassifierBase):
    """Autoencoder trained on MSE alone, then a circuit trained on its frozen latents."""

    def __init__(
        self,
        n_qubits=8,
        segments=2,
        reps=2,
        ae_hidden=DEEP_HIDDEN,
        ae_batch_size=128,
        ae_learning_rate=0.0012,
        ae_epochs=20,
        batch_size=1024,
        learning_rate=1e-2,
        epochs=20,
        validation_fraction=0.1,
        normalize=True,
        random_state=0,
    ):
        self.n_qubits = n_qubits
        self.segments = segments
        self.reps = reps
        self.ae_hidden = ae_hidden
        self.ae_batch_size = ae_batch_size
        self.ae_learning_rate = ae_learning_rate
        self.ae_epochs = ae_epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.validation_fraction = validation_fraction
        self.normalize = normalize
        self.random_state = random_state

    def fit(self, X, y):
        train_ds, val_ds = self._prepare_fit(X, y)
        cfg = train.TrainConfig(
            paradigm="two_step",
            batch_size=self.batch_size,
            learning_rate=self.learning_rate,
            epochs=self.epochs,
            vqc=VqcConfig(self.n_qubits, self.segments, self.reps),
            seed=self._seed(),
            ae_hidden=tuple(self.ae_hidden),
            ae_batch_size=self.ae_batch_size,
            ae_learning_rate=self.ae_learning_rate,
            ae_epochs=self.ae_epochs,
        )
        self.model_, self.records_ = train.train_two_step(cfg, train_ds, val_ds)
        return self


class ClassicalClassifier(_BinaryClassifierBase):
    """Dense ReLU network with a single sigmoid output unit."""

    def __init__(
        self,
        hidden=(16,),
        batch_size=128,
        learning_rate=1e-3,
        epochs=20,
        validation_fraction=0.1,
        normalize=True,
        random_state=0,
    ):
        self.hidden = hidden
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.validation_fraction = validation_fraction
        self.normalize = normalize
        self.random_state = random_state

    def fit(self, X, y):
        train_ds, val_ds = self._prepare_fit(X, y)
        cfg = train.TrainConfig(
            paradigm="classical",
            batch_size=self.batch_size,
            learning_rate=self.learning_rate,
            epochs=self.epochs,
            seed=self._seed(),
            classical_hidden=tuple(self.hidden),
        )
        self.model_, self.record_ = train.train_classical(cfg, train_ds, val_ds)
        return self
