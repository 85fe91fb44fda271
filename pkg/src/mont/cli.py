"""Command-line surface: train, predict, experiment, hv.

Exit codes: 0 success, 1 partial experiment failure, 2 bad configuration,
3 data errors. Every command is deterministic given its flags; the
MONT_RUNS_DIR environment variable overrides the experiment run-directory
root.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from .dataset import (
    SplitSpec,
    check_manifest,
    encode_features,
    load_csv,
    normalize,
    split,
)
from .errors import ConfigError, DataError, MontError
from .harness import aggregate, load_plan, run_plan, write_records, write_report
from .hypervolume import (
    FrontAnalysis,
    HvReference,
    ParetoArchive,
    exclusive_contributions,
    front_analysis,
    front_csv_lines,
    hypervolume_2d,
)
from .metrics import error_rate
from .model_io import Model, load_model, save_model
from .moea import OPTIMIZERS, EvolutionConfig, evolve
from .tree import Activation, class_scores, to_dot, tree_id, tree_size
from .variation import VariationConfig

EXIT_OK = 0
EXIT_PARTIAL = 1
EXIT_CONFIG = 2
EXIT_DATA = 3

# Training knobs, their defaults, and the flags that override them.
TRAIN_DEFAULTS = {
    "label_col": -1,
    "optimizer": "nsga3",
    "activation": "gaussian",
    "pop": 50,
    "gens": 100,
    "seed": 0,
    "train_fraction": 0.8,
    "stratified": True,
    "m_max": 5,
    "p_max": 10,
    "crossover_prob": 0.5,
    "mutation_prob": 0.5,
    "leaf_prob": 0.75,
    "param_sigma": 0.1,
    "divisions": 10,
    "hv_offset": 0.1,
    "strict_manifest": False,
}


def _merged_config(args: argparse.Namespace) -> dict:
    """File config overlaid with explicitly given flags, defaults beneath."""
    cfg = dict(TRAIN_DEFAULTS)
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                file_cfg = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {args.config} is not valid JSON: {exc}") from exc
        unknown = set(file_cfg) - set(cfg)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(file_cfg)
    for key in TRAIN_DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    return cfg


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", required=True, help="CSV file to train on")
    p.add_argument("--label-col", dest="label_col",
                   help="label column index or header name (default: -1, last column)")
    p.add_argument("--optimizer", choices=OPTIMIZERS, help="survival strategy (default: nsga3)")
    p.add_argument("--activation", choices=[a.value for a in Activation],
                   help="node activation (default: gaussian)")
    p.add_argument("--pop", type=int, help="population size (default: 50)")
    p.add_argument("--gens", type=int, help="generations (default: 100)")
    p.add_argument("--seed", type=int, help="run seed (default: 0)")
    p.add_argument("--train-fraction", dest="train_fraction", type=float,
                   help="holdout training fraction (default: 0.8)")
    p.add_argument("--stratified", dest="stratified", action=argparse.BooleanOptionalAction,
                   default=None, help="stratify the holdout split (default: on)")
    p.add_argument("--m-max", dest="m_max", type=int, help="max children per node (default: 5)")
    p.add_argument("--p-max", dest="p_max", type=int, help="max tree height (default: 10)")
    p.add_argument("--crossover-prob", dest="crossover_prob", type=float,
                   help="crossover probability (default: 0.5)")
    p.add_argument("--mutation-prob", dest="mutation_prob", type=float,
                   help="mutation probability (default: 0.5)")
    p.add_argument("--leaf-prob", dest="leaf_prob", type=float,
                   help="leaf probability while growing trees (default: 0.75)")
    p.add_argument("--param-sigma", dest="param_sigma", type=float,
                   help="std-dev of weight/bias perturbation (default: 0.1)")
    p.add_argument("--divisions", type=int,
                   help="nsga3 reference-point divisions per axis (default: 10)")
    p.add_argument("--hv-offset", dest="hv_offset", type=float,
                   help="reference-point offset for best-tree selection (default: 0.1)")
    p.add_argument("--strict-manifest", dest="strict_manifest", action="store_const",
                   const=True, help="fail on dataset-manifest mismatches")
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.add_argument("--name", help="dataset name for the manifest check (default: file stem)")
    p.add_argument("--out", required=True, help="output directory")


def cmd_train(args: argparse.Namespace) -> int:
    cfg = _merged_config(args)
    try:
        label_col: int | str = int(cfg["label_col"])
    except (TypeError, ValueError):
        label_col = cfg["label_col"]

    dataset = load_csv(args.data, label_col, name=args.name)
    if cfg["strict_manifest"]:
        check_manifest(dataset, strict=True)

    train_idx, test_idx = split(
        dataset, SplitSpec(cfg["train_fraction"], cfg["seed"], cfg["stratified"])
    )
    scaled, params = normalize(dataset, train_idx)

    try:
        evo = EvolutionConfig(
            population_size=cfg["pop"],
            generations=cfg["gens"],
            optimizer=cfg["optimizer"],
            divisions=cfg["divisions"],
            activation=Activation.parse(cfg["activation"]),
            variation=VariationConfig(
                m_max=cfg["m_max"],
                p_max=cfg["p_max"],
                crossover_prob=cfg["crossover_prob"],
                mutation_prob=cfg["mutation_prob"],
                leaf_prob=cfg["leaf_prob"],
                param_sigma=cfg["param_sigma"],
            ),
            seed=cfg["seed"],
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    result = evolve(scaled.features[train_idx], scaled.labels[train_idx],
                    dataset.n_classes, evo)
    analysis = front_analysis(result.population, cfg["hv_offset"])
    best = analysis.best
    test_f1 = error_rate(best.tree, scaled.features[test_idx], scaled.labels[test_idx])

    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "config.json"), "w", encoding="utf-8") as fh:
        json.dump(cfg, fh, sort_keys=True, indent=1)
        fh.write("\n")
    with open(os.path.join(args.out, "trace.csv"), "w", encoding="utf-8") as fh:
        fh.write(result.trace[0].CSV_HEADER + "\n")
        for row in result.trace:
            fh.write(row.csv_row() + "\n")
    with open(os.path.join(args.out, "front.csv"), "w", encoding="utf-8") as fh:
        fh.write("\n".join(front_csv_lines(analysis)) + "\n")
    model = Model(best.tree, params, dataset.encoders, dataset.class_names)
    save_model(model, os.path.join(args.out, "best_tree.json"))
    with open(os.path.join(args.out, "best_tree.dot"), "w", encoding="utf-8") as fh:
        fh.write(to_dot(best.tree))

    print("effective config: " + json.dumps(cfg, sort_keys=True))
    print(f"best tree {tree_id(best.tree)}: train_f1={best.objectives[0]!r} "
          f"test_f1={test_f1!r} tree_size={tree_size(best.tree)}")
    print(f"artifacts written to {args.out}")
    return EXIT_OK


def _read_raw_rows(path: str) -> tuple[list[str] | None, list[list[str]]]:
    if not os.path.exists(path):
        raise DataError(f"no such file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [[c.strip() for c in row] for row in csv.reader(fh) if row]
    header = None
    if rows and all(not _floatable(c) for c in rows[0]) and len(rows) > 1 \
            and any(_floatable(c) for c in rows[1]):
        header, rows = rows[0], rows[1:]
    return header, rows


def _floatable(cell: str) -> bool:
    try:
        float(cell)
        return True
    except ValueError:
        return False


def cmd_predict(args: argparse.Namespace) -> int:
    model = load_model(args.model)
    header, rows = _read_raw_rows(args.data)
    r = len(model.class_names)
    out_lines = ["prediction," + ",".join(f"score_{k}" for k in range(r))]

    labels = None
    if rows:
        if args.label_col is not None:
            try:
                lcol = int(args.label_col)
            except ValueError:
                if header is None:
                    raise DataError("label column named but file has no header") from None
                lcol = header.index(args.label_col)
            if lcol < 0:
                lcol += len(rows[0])
            labels = [row[lcol] for row in rows]
            rows = [row[:lcol] + row[lcol + 1:] for row in rows]
        if any(len(row) != len(model.encoders) for row in rows):
            raise DataError(
                f"model expects {len(model.encoders)} feature columns, "
                f"data rows disagree"
            )
        X = model.normalization.transform(encode_features(rows, model.encoders))
        scores = class_scores(model.tree, X)
        preds = np.argmax(scores, axis=-1)
        for p, row_scores in zip(preds, scores):
            out_lines.append(
                f"{int(p)}," + ",".join(repr(float(s)) for s in row_scores)
            )
        if labels is not None:
            lookup = {name: k for k, name in enumerate(model.class_names)}
            try:
                y = np.array([lookup[v] for v in labels])
            except KeyError as exc:
                raise DataError(f"unseen label {exc} in data") from exc
            print(f"error_rate={float(np.mean(preds != y))!r}")

    text = "\n".join(out_lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_experiment(args: argparse.Namespace) -> int:
    plan = load_plan(args.plan)
    runs_root = args.runs_dir or os.environ.get("MONT_RUNS_DIR", "runs")
    result = run_plan(plan, runs_root, workers=args.workers, resume=args.resume)
    report = aggregate(result.records, plan)
    report_dir = os.path.join(result.run_dir, "report")
    write_report(report, plan, report_dir)
    write_records(result.records, os.path.join(result.run_dir, "records.csv"))
    print("effective plan: " + json.dumps(plan.to_dict(), sort_keys=True))
    print(f"{len(result.records)} run(s) recorded under {result.run_dir}")
    print(f"report tables in {report_dir}")
    if result.failures:
        for desc, message in result.failures:
            print(f"FAILED {desc}: {message}", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


def cmd_hv(args: argparse.Namespace) -> int:
    header, rows = _read_raw_rows(args.front)
    points = []
    for i, row in enumerate(rows):
        if len(row) < 2 or not (_floatable(row[0]) and _floatable(row[1])):
            raise DataError(f"{args.front}: row {i} is not an f1,f2 point")
        points.append((float(row[0]), float(row[1])))
    if not points:
        raise DataError(f"{args.front}: no points")

    archive = ParetoArchive.from_points(points)
    dropped = len(points) - len(archive)
    if dropped:
        print(f"note: {dropped} dominated/duplicate point(s) filtered", file=sys.stderr)
    ref = HvReference(args.ref_f1, args.ref_f2)
    outside = [p for p in archive.points if not ref.contains(p)]
    for p in outside:
        print(f"note: point {p} outside reference box, contributes 0", file=sys.stderr)
    hv = hypervolume_2d(archive, ref)
    contributions = exclusive_contributions(archive, ref)
    best = min(range(len(archive)),
               key=lambda i: (-contributions[i], archive.points[i][0], archive.points[i][1]))
    print(f"hypervolume={hv!r}")
    if args.out:
        analysis = FrontAnalysis(archive, ref, contributions, best,
                                 contributions[best] == 0.0)
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write("\n".join(front_csv_lines(analysis)) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mont",
        description="Evolve multi-output neural tree classifiers and analyze "
                    "their error-rate/size trade-off.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train one model on a CSV dataset")
    _add_train_flags(p_train)
    p_train.set_defaults(func=cmd_train)

    p_pred = sub.add_parser("predict", help="predict with a trained model")
    p_pred.add_argument("--model", required=True, help="best_tree.json from train")
    p_pred.add_argument("--data", required=True, help="CSV file to predict on")
    p_pred.add_argument("--label-col", dest="label_col",
                        help="label column to drop (and score against) if present")
    p_pred.add_argument("--out", help="output CSV (default: stdout)")
    p_pred.set_defaults(func=cmd_predict)

    p_exp = sub.add_parser("experiment", help="run a full experiment plan")
    p_exp.add_argument("--plan", required=True, help="plan JSON file")
    p_exp.add_argument("--workers", type=int, default=1, help="parallel workers (default: 1)")
    p_exp.add_argument("--resume", action="store_true",
                       help="skip (cell, run) pairs already recorded")
    p_exp.add_argument("--runs-dir", dest="runs_dir",
                       help="run-directory root (default: $MONT_RUNS_DIR or ./runs)")
    p_exp.set_defaults(func=cmd_experiment)

    p_hv = sub.add_parser("hv", help="hypervolume of a front CSV")
    p_hv.add_argument("--front", required=True, help="CSV of f1,f2 points")
    p_hv.add_argument("--ref-f1", dest="ref_f1", type=float, default=1.0,
                      help="reference error-rate (default: 1.0)")
    p_hv.add_argument("--ref-f2", dest="ref_f2", type=float, default=100.0,
                      help="reference tree-size (default: 100)")
    p_hv.add_argument("--out", help="write per-point contributions CSV here")
    p_hv.set_defaults(func=cmd_hv)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except MontError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARTIAL


if __name__ == "__main__":
    sys.exit(main())
