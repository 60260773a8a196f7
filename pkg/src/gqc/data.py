"""Dataset containers, file formats, normalization, splitting and synthetic data.

Packed binary dataset layout (little-endian)::

    magic    4 bytes  b"GQCD"
    version  uint16   currently 1
    M        uint64   number of samples
    D        uint32   number of features
    features M*D float32, row-major
    labels   M uint8 (0 or 1)

Feature names are not stored; they default to ``x0 .. x{D-1}``.
"""

from __future__ import annotations

import csv
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import DegenerateFeatureError, DomainError, ParseError, SchemaError, SizeError

BINARY_MAGIC = b"GQCD"
BINARY_VERSION = 1
_BINARY_HEADER = struct.Struct("<4sHQI")


@dataclass
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    feature_names: tuple = None
    btag_mask: tuple = ()

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels).astype(np.int64).ravel()
        if self.features.ndim != 2:
            raise SizeError(f"features must be a 2-d matrix, got shape {self.features.shape}")
        if len(self.labels) != len(self.features):
            raise SizeError(f"{len(self.features)} rows but {len(self.labels)} labels")
        if not np.all((self.labels == 0) | (self.labels == 1)):
            raise DomainError("labels must be 0 or 1")
        if self.feature_names is None:
            self.feature_names = tuple(f"x{i}" for i in range(self.n_features))
        self.feature_names = tuple(self.feature_names)
        if len(self.feature_names) != self.n_features:
            raise SizeError("feature_names length does not match the feature count")
        self.btag_mask = tuple(sorted(int(i) for i in self.btag_mask))
        if any(not 0 <= i < self.n_features for i in self.btag_mask):
            raise SizeError("btag_mask index out of range")

    @property
    def n_samples(self):
        return self.features.shape[0]

    @property
    def n_features(self):
        return self.features.shape[1]

    def __len__(self):
        return self.n_samples

    def subset(self, index):
        return Dataset(self.features[index], self.labels[index], self.feature_names, self.btag_mask)

    def without_btag(self):
        """Drop the high-level btag columns."""
        keep = [i for i in range(self.n_features) if i not in set(self.btag_mask)]
        return Dataset(
            self.features[:, keep], self.labels, tuple(self.feature_names[i] for i in keep), ()
        )

    def class_counts(self):
        return int(np.sum(self.labels == 0)), int(np.sum(self.labels == 1))


@dataclass(frozen=True)
class SplitPlan:
    train_size: int = 20000
    val_size: int = 1500
    test_fold_size: int = 20000
    n_folds: int = 5
    seed: int = 0

    @property
    def sizes(self):
        return [self.train_size, self.val_size] + [self.test_fold_size] * self.n_folds


# -- file formats ----------------------------------------------------------------


def is_binary(path):
    with open(path, "rb") as fh:
        return fh.read(4) == BINARY_MAGIC


def load_tabular(path, label_column="label", feature_columns=None, btag_columns=(), delimiter=","):
    """Read a delimited text file with a header row, or a packed binary file.

    ``feature_columns=None`` takes every column except the label. ``btag_columns``
    lists names of high-level columns to flag in :attr:`Dataset.btag_mask`.
    """
    path = Path(path)
    if is_binary(path):
        ds = read_binary(path)
    else:
        ds = _read_delimited(path, label_column, feature_columns, delimiter)
    missing = [c for c in btag_columns if c not in ds.feature_names]
    if missing:
        raise SchemaError(f"{path}: btag columns not among features: {missing}")
    mask = [ds.feature_names.index(c) for c in btag_columns]
    return Dataset(ds.features, ds.labels, ds.feature_names, mask)


def _read_delimited(path, label_column, feature_columns, delimiter):
    with open(path, newline="") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        if label_column not in header:
            raise SchemaError(f"{path}: label column {label_column!r} not found")
        if feature_columns is None:
            feature_columns = [h for h in header if h != label_column]
        missing = [c for c in feature_columns if c not in header]
        if missing:
            raise SchemaError(f"{path}: missing feature columns {missing}")
        cols = [header.index(c) for c in feature_columns]
        label_col = header.index(label_column)
        rows, labels = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            try:
                rows.append([float(row[c]) for c in cols])
                labels.append(float(row[label_col]))
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from None
    if not rows:
        raise ParseError(f"{path}: no data rows")
    labels = np.array(labels)
    if not np.all((labels == 0) | (labels == 1)):
        raise ParseError(f"{path}: labels must be 0 or 1")
    return Dataset(np.array(rows), labels.astype(np.int64), tuple(feature_columns))


def write_tabular(path, ds, label_column="label", delimiter=","):
    """Write ``ds`` as delimited text; floats use round-trip precision."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        writer.writerow([*ds.feature_names, label_column])
        for row, label in zip(ds.features, ds.labels):
            writer.writerow([repr(float(v)) for v in row] + [int(label)])


def write_binary(path, ds):
    header = _BINARY_HEADER.pack(BINARY_MAGIC, BINARY_VERSION, ds.n_samples, ds.n_features)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(ds.features, dtype="<f4").tobytes())
        fh.write(ds.labels.astype(np.uint8).tobytes())


def read_binary(path):
    with open(path, "rb") as fh:
        buf = fh.read()
    if len(buf) < _BINARY_HEADER.size:
        raise ParseError(f"{path}: truncated header")
    magic, version, m, d = _BINARY_HEADER.unpack_from(buf)
    if magic != BINARY_MAGIC:
        raise ParseError(f"{path}: bad magic {magic!r}")
    if version != BINARY_VERSION:
        raise ParseError(f"{path}: unsupported version {version}")
    expected = _BINARY_HEADER.size + 4 * m * d + m
    if len(buf) != expected:
        raise ParseError(f"{path}: expected {expected} bytes, found {len(buf)}")
    feats = np.frombuffer(buf, dtype="<f4", count=m * d, offset=_BINARY_HEADER.size)
    labels = np.frombuffer(buf, dtype=np.uint8, count=m, offset=_BINARY_HEADER.size + 4 * m * d)
    if np.any(labels > 1):
        raise ParseError(f"{path}: labels must be 0 or 1")
    return Dataset(feats.reshape(m, d).astype(np.float64), labels.astype(np.int64))


# -- normalization -----------------------------------------------------------------


@dataclass
class MinMaxStats:
    feature_names: tuple
    mins: np.ndarray
    maxs: np.ndarray

    def to_json(self):
        return {
            "features": [
                {"name": n, "min": float(lo), "max": float(hi)}
                for n, lo, hi in zip(self.feature_names, self.mins, self.maxs)
            ]
        }

    @classmethod
    def from_json(cls, obj):
        feats = obj["features"]
        return cls(
            tuple(f["name"] for f in feats),
            np.array([f["min"] for f in feats], dtype=np.float64),
            np.array([f["max"] for f in feats], dtype=np.float64),
        )

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_json(), indent=2) + "\n")

    @classmethod
    def load(cls, path):
        return cls.from_json(json.loads(Path(path).read_text()))


def fit_minmax(ds):
    mins = ds.features.min(axis=0)
    maxs = ds.features.max(axis=0)
    for name, lo, hi in zip(ds.feature_names, mins, maxs):
        if not hi > lo:
            raise DegenerateFeatureError(name)
    return MinMaxStats(ds.feature_names, mins, maxs)


def normalize(ds, stats=None):
    """Scale each feature to [0, 1]; returns ``(normalized dataset, stats)``.

    Without ``stats`` they are fitted on ``ds``. Reused stats may map values
    outside [0, 1]; those are clipped.
    """
    if stats is None:
        stats = fit_minmax(ds)
    elif tuple(stats.feature_names) != tuple(ds.feature_names):
        raise SchemaError("normalization stats were fitted on different features")
    scaled = (ds.features - stats.mins) / (stats.maxs - stats.mins)
    np.clip(scaled, 0.0, 1.0, out=scaled)
    return Dataset(scaled, ds.labels, ds.feature_names, ds.btag_mask), stats


# -- splitting -----------------------------------------------------------------------


def split(ds, plan):
    """Class-balanced, seeded split into ``(train, val, [fold_1 .. fold_n])``.

    A split of odd size takes the extra sample from class 0.
    """
    sizes = plan.sizes
    need1 = sum(s // 2 for s in sizes)
    need0 = sum(s - s // 2 for s in sizes)
    have0, have1 = ds.class_counts()
    if have0 < need0 or have1 < need1:
        raise SizeError(
            f"plan needs {need0} class-0 and {need1} class-1 samples, dataset has {have0} and {have1}"
        )
    rng = np.random.default_rng(plan.seed)
    pool0 = rng.permutation(np.flatnonzero(ds.labels == 0))
    pool1 = rng.permutation(np.flatnonzero(ds.labels == 1))
    parts, p0, p1 = [], 0, 0
    for size in sizes:
        n1, n0 = size // 2, size - size // 2
        idx = np.concatenate([pool0[p0 : p0 + n0], pool1[p1 : p1 + n1]])
        p0, p1 = p0 + n0, p1 + n1
        parts.append(ds.subset(rng.permutation(idx)))
    return parts[0], parts[1], parts[2:]


# -- synthetic data ------------------------------------------------------------------


def synth_hidden_signal(
    n_samples, d_total, d_signal, noise_scale, seed, signal_shift=1.0, signal_std=0.5
):
    """Two-class data whose class information lives only in low-variance directions.

    In a latent basis, ``d_signal`` coordinates are ``(2y - 1) * signal_shift / sqrt(d_signal)
    + N(0, signal_std**2)`` and the remaining ``d_total - d_signal`` coordinates are
    class-independent ``N(0, noise_scale**2)``. A seeded random rotation then mixes
    all coordinates into the observed features, so every feature is dominated by
    nuisance variance and a variance-preserving compressor keeps nuisance structure.
    Labels are balanced (``n_samples // 2`` positives).
    """
    if not 0 < d_signal < d_total:
        raise SizeError(f"need 0 < d_signal < d_total, got d_signal={d_signal}, d_total={d_total}")
    if n_samples < 2:
        raise SizeError("need at least two samples")
    if not noise_scale > 0 or not signal_std > 0:
        raise SizeError("noise_scale and signal_std must be positive")
    rng = np.random.default_rng(seed)
    labels = rng.permutation(np.arange(n_samples) < n_samples // 2).astype(np.int64)
    latent = np.empty((n_samples, d_total))
    sign = 2.0 * labels - 1.0
    latent[:, :d_signal] = (
        sign[:, None] * signal_shift / np.sqrt(d_signal)
        + rng.normal(0.0, signal_std, size=(n_samples, d_signal))
    )
    latent[:, d_signal:] = rng.normal(0.0, noise_scale, size=(n_samples, d_total - d_signal))
    rotation, r = np.linalg.qr(rng.normal(size=(d_total, d_total)))
    rotation *= np.sign(np.diag(r))
    return Dataset(latent @ rotation.T, labels)
