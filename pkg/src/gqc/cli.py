"""Command-line entry point: ``gqc {train,eval,compare,synth,gridsearch}``.

Exit codes: 0 success, 2 invalid configuration or arguments, 3 training
failure, 4 evaluation mismatch (feature set, fold count, model type).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import data, models
from . import eval as ev
from .config import dump_config, load_config, train_config_to_dict
from .exceptions import ConfigError, GqcError, ParseError, SchemaError, SizeError, TrainingError
from .train import grid_search, train

log = logging.getLogger("gqc")

EXIT_OK, EXIT_CONFIG, EXIT_TRAIN, EXIT_MISMATCH = 0, 2, 3, 4


class MismatchError(GqcError):
    """Checkpoint and evaluation data or runs are incompatible."""


def _fail(code, message):
    print(f"gqc: error: {message}", file=sys.stderr)
    return code


# -- train ---------------------------------------------------------------------


def _apply_overrides(cfg, args):
    if args.seed is not None:
        cfg.train = cfg.train.replace(seed=args.seed)
    if args.out is not None:
        cfg.output_dir = Path(args.out)
    if args.no_btag:
        cfg.include_btag = False
    return cfg


def _load_raw(cfg):
    d = cfg.data
    ds = data.load_tabular(d.path, d.label_column, d.feature_columns, d.btag_columns, d.delimiter)
    return ds if cfg.include_btag else ds.without_btag()


def prepare_data(cfg):
    """Load, split and normalize; returns ``(train, val, raw test folds, stats)``."""
    try:
        ds = _load_raw(cfg)
        train_ds, val_ds, folds = data.split(ds, cfg.split)
    except (SchemaError, ParseError, SizeError) as exc:
        raise ConfigError(str(exc), "data") from exc
    stats = data.MinMaxStats.load(cfg.stats_path) if cfg.stats_path else None
    train_ds, stats = data.normalize(train_ds, stats)
    val_ds, _ = data.normalize(val_ds, stats)
    return train_ds, val_ds, folds, stats


def _checkpoint_meta(cfg, ds_names, btag_names, stats):
    return {
        "format": "gqc-model",
        "feature_names": list(ds_names),
        "btag_columns": list(btag_names),
        "label_column": cfg.data.label_column,
        "include_btag": cfg.include_btag,
        "normalization": stats.to_json(),
        "train_config": train_config_to_dict(cfg.train),
    }


def run_train(cfg):
    """Train per ``cfg`` and write the run directory; returns its path."""
    train_ds, val_ds, folds, stats = prepare_data(cfg)
    model, records = train(cfg.train, train_ds, val_ds)
    out = Path(cfg.output_dir)
    (out / "folds").mkdir(parents=True, exist_ok=True)
    meta = _checkpoint_meta(cfg, train_ds.feature_names, cfg.data.btag_columns, stats)
    models.save_model(out / "model.ckpt", model, meta)
    names = ["ae", "vqc"] if len(records) == 2 else [None]
    for name, record in zip(names, records):
        record.write_csv(out / (f"epoch_log_{name}.csv" if name else "epoch_log.csv"))
    (out / "timing.json").write_text(
        json.dumps({"wall_time_s": [r.wall_time for r in records]}, indent=2) + "\n"
    )
    stats.save(out / "stats.json")
    dump_config(cfg, out / "config.yaml")
    for k, fold in enumerate(folds):
        data.write_tabular(out / "folds" / f"fold_{k}.csv", fold, cfg.data.label_column)
    return out


def cmd_train(args):
    try:
        cfg = _apply_overrides(load_config(args.config), args)
        out = run_train(cfg)
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, str(exc))
    except (TrainingError, ArithmeticError) as exc:
        return _fail(EXIT_TRAIN, f"training failed: {exc}")
    print(out)
    return EXIT_OK


# -- eval ----------------------------------------------------------------------


def _fold_files(path):
    path = Path(path)
    if path.is_file():
        return [path]
    if not path.is_dir():
        raise ConfigError(f"{path} not found", "folds")
    files = sorted(p for p in path.iterdir() if p.suffix in (".csv", ".gqcd"))
    if not files:
        raise ConfigError(f"no .csv or .gqcd fold files in {path}", "folds")
    return files


def load_eval_folds(files, meta, no_btag=False):
    """Read raw folds, optionally drop btag columns, and normalize with the checkpoint's stats."""
    stats = data.MinMaxStats.from_json(meta["normalization"])
    btag = meta.get("btag_columns", [])
    folds = []
    for f in files:
        try:
            ds = data.load_tabular(f, meta.get("label_column", "label"))
        except SchemaError as exc:
            raise MismatchError(str(exc)) from exc
        if no_btag or not meta.get("include_btag", True):
            present = [c for c in btag if c in ds.feature_names]
            ds = data.Dataset(ds.features, ds.labels, ds.feature_names,
                              [ds.feature_names.index(c) for c in present]).without_btag()
        if list(ds.feature_names) != list(meta["feature_names"]):
            raise MismatchError(
                f"{f}: {ds.n_features} features do not match the checkpoint's "
                f"{len(meta['feature_names'])}"
            )
        folds.append(data.normalize(ds, stats)[0])
    return folds


def _load_checkpoint(path):
    try:
        return models.load_model(path)
    except FileNotFoundError as exc:
        raise ConfigError(f"checkpoint {path} not found") from exc
    except (ParseError, ValueError, KeyError) as exc:
        raise MismatchError(f"cannot load checkpoint {path}: {exc}") from exc


def run_eval(checkpoint, folds_path, out=None, kld=None, no_btag=False, tpr_target=0.8, n_bins=60):
    """Evaluate a checkpoint on every fold; returns the summary report dict."""
    model, meta = _load_checkpoint(checkpoint)
    folds = load_eval_folds(_fold_files(folds_path), meta, no_btag)
    out = Path(out) if out is not None else Path(checkpoint).parent / "eval"
    out.mkdir(parents=True, exist_ok=True)
    curves = [ev.roc(models.model_scores(model, f.features), f.labels) for f in folds]
    for k, curve in enumerate(curves):
        ev.write_roc_csv(out / f"roc_fold_{k}.csv", curve)
    mean, std = ev.roc_band(curves)
    _write_columns(out / "roc_band.csv", {"fpr": ev.DEFAULT_GRID, "tpr_mean": mean, "tpr_std": std})
    summary = ev.summarize_folds(curves, tpr_target)
    report = {"model_type": meta["model_type"], **summary.to_json()}
    (out / "summary.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")

    if kld:
        if meta["model_type"] == "classical":
            raise MismatchError("--kld needs a model with a latent space")
        Z = np.vstack([models.model_latents(model, f.features) for f in folds])
        y = np.concatenate([f.labels for f in folds])
        latents = {meta["model_type"]: (Z, y)}
        ratio = None
        if kld is not True:
            ref, ref_meta = _load_checkpoint(kld)
            if ref_meta["model_type"] == "classical":
                raise MismatchError("reference checkpoint has no latent space")
            if list(ref_meta["feature_names"]) != list(meta["feature_names"]):
                raise MismatchError("reference checkpoint was trained on different features")
            ref_folds = load_eval_folds(_fold_files(folds_path), ref_meta, no_btag)
            ref_name = f"reference_{ref_meta['model_type']}"
            latents[ref_name] = (
                np.vstack([models.model_latents(ref, f.features) for f in ref_folds]),
                np.concatenate([f.labels for f in ref_folds]),
            )
            ratio = (meta["model_type"], ref_name)
        kld_report = ev.latent_separation_report(latents, n_bins, ratio=ratio)
        (out / "kld.json").write_text(json.dumps(kld_report, indent=2, sort_keys=True) + "\n")
        report["kld"] = kld_report
    return report


def cmd_eval(args):
    kld = args.kld
    try:
        report = run_eval(args.checkpoint, args.folds, args.out, kld, args.no_btag,
                          args.tpr_target, args.n_bins)
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, str(exc))
    except MismatchError as exc:
        return _fail(EXIT_MISMATCH, str(exc))
    print(f"AUC {report['auc_mean']:.4f} +- {report['auc_std']:.4f} over {report['n_folds']} folds")
    return EXIT_OK


# -- compare ---------------------------------------------------------------------


def _write_columns(path, columns):
    names = list(columns)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(names)
        for row in zip(*(columns[n] for n in names)):
            writer.writerow([repr(float(v)) for v in row])


def _run_curves(run):
    run = Path(run)
    for candidate in (run / "eval", run):
        files = sorted(candidate.glob("roc_fold_*.csv"), key=lambda p: int(p.stem.rsplit("_", 1)[1]))
        if files:
            return [ev.read_roc_csv(f) for f in files]
    raise ConfigError(f"{run} has no evaluated ROC folds (run `gqc eval` first)")


def run_compare(runs, out=None):
    """TPR differences of the first run against each other run on a common FPR grid."""
    if len(runs) < 2:
        raise ConfigError("compare needs at least two run directories")
    base = _run_curves(runs[0])
    out = Path(out) if out is not None else Path(runs[0]) / "compare"
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for other in runs[1:]:
        curves = _run_curves(other)
        if len(curves) != len(base):
            raise MismatchError(f"fold counts differ: {len(base)} vs {len(curves)} ({other})")
        a_mean, a_std = ev.roc_band(base)
        b_mean, b_std = ev.roc_band(curves)
        d_mean, d_std = ev.tpr_difference(base, curves)
        path = out / f"diff_vs_{Path(other).resolve().name}.csv"
        _write_columns(path, {
            "fpr": ev.DEFAULT_GRID, "tpr_a_mean": a_mean, "tpr_a_std": a_std,
            "tpr_b_mean": b_mean, "tpr_b_std": b_std, "diff_mean": d_mean, "diff_std": d_std,
        })
        written.append(path)
    return written


def cmd_compare(args):
    try:
        for path in run_compare(args.runs, args.out):
            print(path)
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, str(exc))
    except MismatchError as exc:
        return _fail(EXIT_MISMATCH, str(exc))
    return EXIT_OK


# -- synth / gridsearch ------------------------------------------------------------


def cmd_synth(args):
    seed = 0 if args.seed is None else args.seed
    try:
        ds = data.synth_hidden_signal(args.n_samples, args.d_total, args.d_signal,
                                      args.noise_scale, seed, args.signal_shift, args.signal_std)
    except SizeError as exc:
        return _fail(EXIT_CONFIG, str(exc))
    out = Path(args.out or "synthetic.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    if out.suffix == ".gqcd":
        data.write_binary(out, ds)
    else:
        data.write_tabular(out, ds)
    print(out)
    return EXIT_OK


def cmd_gridsearch(args):
    try:
        cfg = _apply_overrides(load_config(args.config), args)
        train_ds, val_ds, _, _ = prepare_data(cfg)
        best, trials = grid_search(cfg.grid_axes, cfg.train, train_ds, val_ds)
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, str(exc))
    except (TrainingError, ArithmeticError) as exc:
        return _fail(EXIT_TRAIN, f"training failed: {exc}")
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "trials.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(trials[0]), lineterminator="\n")
        writer.writeheader()
        writer.writerows(trials)
    dump_config(dataclasses.replace(cfg, train=best), out / "best_config.yaml")
    print(out / "best_config.yaml")
    return EXIT_OK


# -- parser --------------------------------------------------------------------------


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="override the training seed")
    common.add_argument("--out", default=None, help="output directory or file")
    common.add_argument("--no-btag", action="store_true", help="drop the btag feature columns")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="gqc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", parents=[common], help="train one paradigm from a config file")
    p.add_argument("config")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", parents=[common], help="ROC/AUC over test folds")
    p.add_argument("checkpoint")
    p.add_argument("folds", help="directory of fold files, or a single file")
    p.add_argument("--kld", nargs="?", const=True, default=None, metavar="REFERENCE_CKPT",
                   help="latent KL divergences; with a reference checkpoint also the ratio R")
    p.add_argument("--tpr-target", type=float, default=0.8)
    p.add_argument("--n-bins", type=int, default=60)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("compare", parents=[common], help="TPR differences between evaluated runs")
    p.add_argument("runs", nargs="+")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("synth", parents=[common], help="write a synthetic hidden-signal dataset")
    p.add_argument("--n-samples", type=int, default=4000)
    p.add_argument("--d-total", type=int, default=20)
    p.add_argument("--d-signal", type=int, default=2)
    p.add_argument("--noise-scale", type=float, default=5.0)
    p.add_argument("--signal-shift", type=float, default=1.0)
    p.add_argument("--signal-std", type=float, default=0.5)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("gridsearch", parents=[common], help="sequential hyperparameter search")
    p.add_argument("config")
    p.set_defaults(func=cmd_gridsearch)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
