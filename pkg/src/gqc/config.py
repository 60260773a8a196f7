"""Experiment configuration files (YAML) and their validation."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .data import SplitPlan
from .exceptions import ConfigError, SizeError
from .train import GRID_AXES, TrainConfig
from .vqc import VqcConfig

_DATA_KEYS = {"path", "label_column", "feature_columns", "btag_columns", "delimiter"}
_TRAIN_KEYS = {
    "paradigm", "batch_size", "learning_rate", "epochs", "lambda", "n_qubits", "segments",
    "reps", "seed", "classical_hidden", "gqc_hidden", "ae_hidden", "ae_batch_size",
    "ae_learning_rate", "ae_epochs",
}
_TOP_KEYS = {"data", "stats_path", "include_btag", "split", "train", "eval", "output_dir", "gridsearch"}


@dataclass
class DataSource:
    path: Path
    label_column: str = "label"
    feature_columns: list | None = None
    btag_columns: list = field(default_factory=list)
    delimiter: str = ","


@dataclass
class EvalSettings:
    tpr_target: float = 0.8
    n_bins: int = 60


@dataclass
class ExperimentConfig:
    data: DataSource
    split: SplitPlan
    train: TrainConfig
    eval: EvalSettings = field(default_factory=EvalSettings)
    output_dir: Path = Path("runs/default")
    stats_path: Path | None = None
    include_btag: bool = True
    grid_axes: list = field(default_factory=lambda: [(k, list(v)) for k, v in GRID_AXES])

    def to_dict(self):
        """Fully resolved tree, including every default and seed."""
        t = self.train
        return {
            "data": {
                "path": str(self.data.path),
                "label_column": self.data.label_column,
                "feature_columns": self.data.feature_columns,
                "btag_columns": list(self.data.btag_columns),
                "delimiter": self.data.delimiter,
            },
            "stats_path": None if self.stats_path is None else str(self.stats_path),
            "include_btag": self.include_btag,
            "split": dataclasses.asdict(self.split),
            "train": train_config_to_dict(t),
            "eval": dataclasses.asdict(self.eval),
            "output_dir": str(self.output_dir),
            "gridsearch": {"axes": [[k, list(v)] for k, v in self.grid_axes]},
        }


def train_config_to_dict(t):
    return {
        "paradigm": t.paradigm,
        "batch_size": t.batch_size,
        "learning_rate": t.learning_rate,
        "epochs": t.epochs,
        "lambda": t.lam,
        "n_qubits": t.vqc.n_qubits,
        "segments": t.vqc.segments,
        "reps": t.vqc.reps,
        "seed": t.seed,
        "classical_hidden": list(t.classical_hidden),
        "gqc_hidden": list(t.gqc_hidden),
        "ae_hidden": list(t.ae_hidden),
        "ae_batch_size": t.ae_batch_size,
        "ae_learning_rate": t.ae_learning_rate,
        "ae_epochs": t.ae_epochs,
    }


def train_config_from_dict(raw):
    unknown = set(raw) - _TRAIN_KEYS
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)}", "train")
    raw = dict(raw)
    paradigm = raw.pop("paradigm", "gqc")
    vqc_kw = {k: raw.pop(k) for k in ("n_qubits", "segments", "reps") if k in raw}
    if "lambda" in raw:
        raw["lam"] = raw.pop("lambda")
    try:
        vqc_cfg = VqcConfig(**{**dataclasses.asdict(VqcConfig()), **vqc_kw})
    except (SizeError, TypeError) as exc:
        raise ConfigError(str(exc), "train.vqc") from exc
    try:
        return TrainConfig.for_paradigm(paradigm, vqc=vqc_cfg, **raw)
    except ConfigError as exc:
        raise ConfigError(str(exc).split(": ", 1)[-1], f"train.{_public(exc.field)}") from exc
    except TypeError as exc:
        raise ConfigError(str(exc), "train") from exc


def _public(name):
    return {"lam": "lambda"}.get(name, name)


def _section(raw, key):
    value = raw.get(key) or {}
    if not isinstance(value, dict):
        raise ConfigError("must be a mapping", key)
    return value


def _resolve(base, value):
    path = Path(value)
    return path if path.is_absolute() else (base / path)


def config_from_dict(raw, base_dir=Path(".")):
    if not isinstance(raw, dict):
        raise ConfigError("top level must be a mapping")
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)}")

    data_raw = _section(raw, "data")
    if "path" not in data_raw:
        raise ConfigError("is required", "data.path")
    bad = set(data_raw) - _DATA_KEYS
    if bad:
        raise ConfigError(f"unknown keys {sorted(bad)}", "data")
    data = DataSource(
        path=_resolve(base_dir, data_raw["path"]),
        label_column=data_raw.get("label_column", "label"),
        feature_columns=data_raw.get("feature_columns"),
        btag_columns=list(data_raw.get("btag_columns") or []),
        delimiter=data_raw.get("delimiter", ","),
    )
    try:
        split = SplitPlan(**_section(raw, "split"))
    except TypeError as exc:
        raise ConfigError(str(exc), "split") from exc
    for name in ("train_size", "val_size", "test_fold_size", "n_folds"):
        if getattr(split, name) < 1:
            raise ConfigError("must be >= 1", f"split.{name}")

    train = train_config_from_dict(_section(raw, "train"))
    try:
        ev = EvalSettings(**_section(raw, "eval"))
    except TypeError as exc:
        raise ConfigError(str(exc), "eval") from exc
    if not 0.0 < ev.tpr_target <= 1.0:
        raise ConfigError("must lie in (0, 1]", "eval.tpr_target")

    grid = _section(raw, "gridsearch").get("axes")
    if grid is None:
        grid_axes = [(k, list(v)) for k, v in GRID_AXES]
    else:
        try:
            grid_axes = [(str(k), list(v)) for k, v in grid]
        except (TypeError, ValueError) as exc:
            raise ConfigError("must be a list of [name, candidates] pairs", "gridsearch.axes") from exc

    stats_path = raw.get("stats_path")
    return ExperimentConfig(
        data=data,
        split=split,
        train=train,
        eval=ev,
        output_dir=_resolve(base_dir, raw.get("output_dir", "runs/default")),
        stats_path=None if stats_path is None else _resolve(base_dir, stats_path),
        include_btag=bool(raw.get("include_btag", True)),
        grid_axes=grid_axes,
    )


def load_config(path):
    """Parse and validate an experiment file; relative paths resolve against its directory."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file {path} not found")
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML: {exc}") from exc
    cfg = config_from_dict(raw, path.parent)
    validate_paths(cfg)
    return cfg


def validate_paths(cfg):
    if not cfg.data.path.is_file():
        raise ConfigError(f"file {cfg.data.path} not found", "data.path")
    if cfg.stats_path is not None and not cfg.stats_path.is_file():
        raise ConfigError(f"file {cfg.stats_path} not found", "stats_path")


def dump_config(cfg, path):
    Path(path).write_text(yaml.safe_dump(cfg.to_dict(), sort_keys=False))
