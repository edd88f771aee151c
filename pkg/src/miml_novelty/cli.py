"""Command-line entry points.

Subcommands: generate, train, tune, detect, eval, baseline, experiment.
Exit codes: 0 success, 2 format error, 3 convergence/training error,
4 invalid configuration or undefined evaluation.
"""

import argparse
import csv
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import formats
from .detector import detect, roc, threshold_grid
from .errors import (ConvergenceError, EvaluationError, FormatError, GenerationError,
                     MimlError, NumericsError, ParameterError, TrainingError)
from .experiment import ExperimentConfig, replication_data, run_baseline, run_experiment
from .kernel import KernelConfig
from .model import TrainConfig, train, train_config_with_seed
from .optim import LbfgsConfig
from .tuning import GridSpec, default_grid, grid_search

EXIT_FORMAT = 2
EXIT_CONVERGENCE = 3
EXIT_CONFIG = 4


def _load_config(args) -> ExperimentConfig:
    if not args.config:
        raise ParameterError("this subcommand needs --config <path>")
    config = ExperimentConfig.from_json_file(args.config)
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)
    return config


def _out_dir(args, default=".") -> Path:
    path = Path(args.out or default)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _cmd_generate(args) -> int:
    config = _load_config(args)
    out = _out_dir(args)
    train_ds, test_ds = replication_data(config, args.rep)
    formats.write_dataset_csv(train_ds, out / "train_instances.csv", out / "train_labels.csv")
    formats.write_dataset_csv(test_ds, out / "test_instances.csv", out / "test_labels.csv")
    print(f"wrote train ({train_ds.n_bags} bags, {train_ds.instance_count} instances) "
          f"and test ({test_ds.n_bags} bags) CSV pairs to {out}")
    return 0


def _train_cfg(args) -> TrainConfig:
    lbfgs = LbfgsConfig(max_iters=args.lbfgs_iters, grad_tol=args.lbfgs_tol)
    return TrainConfig(outer_iters=args.outer_iters, restarts=args.restarts,
                       seed=args.seed if args.seed is not None else 0, lbfgs=lbfgs)


def _add_train_flags(sub):
    sub.add_argument("--instances", required=True)
    sub.add_argument("--labels", required=True)
    sub.add_argument("--outer-iters", type=int, default=30)
    sub.add_argument("--restarts", type=int, default=5)
    sub.add_argument("--lbfgs-iters", type=int, default=200)
    sub.add_argument("--lbfgs-tol", type=float, default=1e-6)


def _cmd_train(args) -> int:
    dataset = formats.load_csv_dataset(args.instances, args.labels)
    result = train(dataset, args.lam, KernelConfig(args.gamma), _train_cfg(args))
    out = _out_dir(args)
    path = out / "model.json"
    formats.save_model(path, result.model, threshold_grid(result.model, dataset))
    print(f"final objective {result.final_objective:.6f} "
          f"(restart {result.restart_index}); model -> {path}")
    return 0


def _cmd_tune(args) -> int:
    dataset = formats.load_csv_dataset(args.instances, args.labels)
    if args.lambda_grid or args.gamma_grid:
        base = default_grid(dataset.instances)
        grid = GridSpec(lambda_grid=tuple(args.lambda_grid) or base.lambda_grid,
                        gamma_grid=tuple(args.gamma_grid) or base.gamma_grid)
    else:
        grid = default_grid(dataset.instances)
    report = grid_search(dataset, grid, _train_cfg(args))
    out = _out_dir(args)
    path = out / "model.json"
    formats.save_model(path, report.best_model, threshold_grid(report.best_model, dataset))
    with open(out / "tuning_table.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["lambda", "gamma", "zero_one_loss", "objective", "failed"])
        for cell in report.table:
            writer.writerow([repr(cell.lam), repr(cell.gamma), cell.zero_one_loss,
                             "" if cell.objective is None else repr(cell.objective),
                             int(cell.failed)])
    print(f"best lambda {report.best_lambda:g}, gamma {report.best_gamma:g}; model -> {path}")
    return 0


def _cmd_detect(args) -> int:
    model, _thresholds = formats.load_model(args.model)
    ids, _bags, _tags, x = formats.load_csv_instances(args.instances)
    out_path = Path(args.out) if args.out else None
    sink = open(out_path, "w", encoding="utf-8", newline="") if out_path else sys.stdout
    try:
        writer = csv.writer(sink)
        writer.writerow(["instance_id", "max_score", "best_class", "verdict"])
        for instance_id, row in zip(ids, x):
            d = detect(model, row, args.epsilon)
            writer.writerow([instance_id, repr(d.max_score),
                             str(model.label_order[d.best_class]), d.verdict])
    finally:
        if out_path:
            sink.close()
    return 0


def _cmd_eval(args) -> int:
    model, thresholds = formats.load_model(args.model)
    dataset = formats.load_csv_dataset(args.instances, args.labels)
    curve = roc(model, dataset, thresholds)
    out = _out_dir(args)
    formats.write_roc_csv(curve, out / "roc.csv")
    print(f"AUC {curve.auc:.4f} over {dataset.instance_count} instances; roc -> {out / 'roc.csv'}")
    return 0


def _cmd_experiment(args) -> int:
    config = _load_config(args)
    report = run_experiment(config, _out_dir(args, default="runs"), threads=args.threads)
    mean = "n/a" if report.mean_auc is None else f"{report.mean_auc:.4f}"
    std = "n/a" if report.std_auc is None else f"{report.std_auc:.4f}"
    print(f"mean AUC {mean} (std {std}) over "
          f"{sum(1 for r in report.replications if not r.skipped)} replications")
    return 0


def _cmd_baseline(args) -> int:
    config = _load_config(args)
    report = run_baseline(config, _out_dir(args, default="runs"), threads=args.threads)
    mean = "n/a" if report.mean_auc is None else f"{report.mean_auc:.4f}"
    print(f"one-class SVM mean AUC {mean} over "
          f"{sum(1 for r in report.replications if not r.skipped)} replications")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="miml-novelty",
        description="Kernel score-function novelty detection for bag-labeled data")
    parser.add_argument("--seed", type=int, default=None, help="master seed override")
    parser.add_argument("--out", default=None, help="output directory or file")
    parser.add_argument("--threads", type=int, default=1, help="parallel replications")
    parser.add_argument("--config", default=None, help="experiment config JSON")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="emit train/test dataset CSVs for one replication")
    gen.add_argument("--rep", type=int, default=0)
    gen.set_defaults(func=_cmd_generate)

    tr = sub.add_parser("train", help="train one (lambda, gamma) model from CSVs")
    _add_train_flags(tr)
    tr.add_argument("--lam", "--lambda", dest="lam", type=float, required=True)
    tr.add_argument("--gamma", type=float, required=True)
    tr.set_defaults(func=_cmd_train)

    tu = sub.add_parser("tune", help="grid-search (lambda, gamma) from CSVs")
    _add_train_flags(tu)
    tu.add_argument("--lambda-grid", type=float, nargs="*", default=[])
    tu.add_argument("--gamma-grid", type=float, nargs="*", default=[])
    tu.set_defaults(func=_cmd_tune)

    de = sub.add_parser("detect", help="score instances against a saved model")
    de.add_argument("--model", required=True)
    de.add_argument("--instances", required=True)
    de.add_argument("--epsilon", type=float, required=True)
    de.set_defaults(func=_cmd_detect)

    ev = sub.add_parser("eval", help="ROC/AUC of a saved model on tagged CSVs")
    ev.add_argument("--model", required=True)
    ev.add_argument("--instances", required=True)
    ev.add_argument("--labels", required=True)
    ev.set_defaults(func=_cmd_eval)

    ex = sub.add_parser("experiment", help="full replicated reproduction run")
    ex.set_defaults(func=_cmd_experiment)

    ba = sub.add_parser("baseline", help="one-class SVM comparison on the same bags")
    ba.set_defaults(func=_cmd_baseline)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FormatError as exc:
        print(f"format error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except (ConvergenceError, TrainingError, NumericsError) as exc:
        print(f"convergence error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (ParameterError, EvaluationError, GenerationError, MimlError) as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
