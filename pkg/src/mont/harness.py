"""Repeatable benchmark harness: seeded runs, persistence, aggregation.

A plan is the cross product (datasets x optimizers x activations) with a
fixed number of seeded runs per cell. Run i always uses seed
base_seed + i, so any subset of the work can execute anywhere, in any
order, on any number of workers, and still produce the same records.

Run directory layout, keyed by a hash of the canonical plan:

    <runs_root>/<plan-hash>/<dataset>/<optimizer>-<activation>/run<k>/
        record.json, trace.csv, front.csv, best_tree.json, best_tree.dot
    <runs_root>/<plan-hash>/report/
        table2.csv, table3.csv, table4.csv, table5.csv
    <runs_root>/<plan-hash>/records.csv
"""

from __future__ import annotations

import concurrent.futures
import hashlib
import json
import os
import time
import warnings
from dataclasses import dataclass, field, fields
from typing import Sequence

import numpy as np

from .dataset import Dataset, SplitSpec, check_manifest, load_csv, normalize, split
from .errors import ConfigError
from .hypervolume import (
    HvReference,
    ParetoArchive,
    front_analysis,
    front_csv_lines,
    hypervolume_2d,
)
from .metrics import RunRecord, error_rate, welch_ttest
from .model_io import Model, save_model
from .moea import OPTIMIZERS, EvolutionConfig, evolve
from .tree import Activation, to_dot, tree_id
from .variation import VariationConfig

ALPHA = 0.05  # significance level of the report's t-tests


@dataclass(frozen=True)
class DatasetSpec:
    name: str
    path: str
    label_col: int | str = -1


@dataclass(frozen=True)
class ExperimentPlan:
    """Everything a full experiment needs, hashable and serializable."""

    datasets: tuple[DatasetSpec, ...]
    optimizers: tuple[str, ...] = ("gp", "nsga2", "nsga3")
    activations: tuple[str, ...] = ("gaussian",)
    runs: int = 30
    base_seed: int = 1
    train_fraction: float = 0.8
    stratified: bool = True
    resample_split: bool = True  # fresh split per run; False reuses run 0's
    strict_manifest: bool = False
    population_size: int = 50
    generations: int = 100
    divisions: int = 10
    variation: VariationConfig = field(default_factory=VariationConfig)
    hv_ref: tuple[float, float] = (1.0, 100.0)
    hv_offset: float = 0.1
    baseline_optimizer: str = "nsga3"

    def __post_init__(self):
        if self.runs < 1:
            raise ConfigError("runs must be at least 1")
        if not self.datasets:
            raise ConfigError("plan needs at least one dataset")
        for opt in self.optimizers:
            if opt not in OPTIMIZERS:
                raise ConfigError(f"unknown optimizer {opt!r}")
        for act in self.activations:
            Activation.parse(act)

    def to_dict(self) -> dict:
        return {
            "datasets": [
                {"name": d.name, "path": d.path, "label_col": d.label_col}
                for d in self.datasets
            ],
            "optimizers": list(self.optimizers),
            "activations": list(self.activations),
            "runs": self.runs,
            "base_seed": self.base_seed,
            "train_fraction": self.train_fraction,
            "stratified": self.stratified,
            "resample_split": self.resample_split,
            "strict_manifest": self.strict_manifest,
            "population_size": self.population_size,
            "generations": self.generations,
            "divisions": self.divisions,
            "variation": {
                "m_max": self.variation.m_max,
                "p_max": self.variation.p_max,
                "crossover_prob": self.variation.crossover_prob,
                "mutation_prob": self.variation.mutation_prob,
                "leaf_prob": self.variation.leaf_prob,
                "weight_init": list(self.variation.weight_init),
                "param_sigma": self.variation.param_sigma,
                "max_retries": self.variation.max_retries,
            },
            "hv_ref": list(self.hv_ref),
            "hv_offset": self.hv_offset,
            "baseline_optimizer": self.baseline_optimizer,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentPlan":
        d = dict(d)
        try:
            datasets = tuple(
                DatasetSpec(s["name"], s["path"], s.get("label_col", -1))
                for s in d.pop("datasets")
            )
            var = dict(d.pop("variation", {}))
            unknown = set(var) - {f.name for f in fields(VariationConfig)}
            if unknown:
                raise ValueError(f"unknown variation keys {sorted(unknown)}")
            if "weight_init" in var:
                var["weight_init"] = tuple(var["weight_init"])
            variation = VariationConfig(**var)
            hv_ref = tuple(d.pop("hv_ref", (1.0, 100.0)))
            optimizers = tuple(d.pop("optimizers", ("gp", "nsga2", "nsga3")))
            activations = tuple(d.pop("activations", ("gaussian",)))
            return cls(
                datasets=datasets,
                optimizers=optimizers,
                activations=activations,
                variation=variation,
                hv_ref=hv_ref,
                **d,
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid plan: {exc}") from exc

    def plan_hash(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(canon.encode()).hexdigest()[:12]

    def evolution_config(self, optimizer: str, activation: str, seed: int) -> EvolutionConfig:
        return EvolutionConfig(
            population_size=self.population_size,
            generations=self.generations,
            optimizer=optimizer,
            divisions=self.divisions,
            activation=Activation.parse(activation),
            variation=self.variation,
            seed=seed,
        )


def load_plan(path: str) -> ExperimentPlan:
    try:
        with open(path, encoding="utf-8") as fh:
            return ExperimentPlan.from_dict(json.load(fh))
    except OSError as exc:
        raise ConfigError(f"cannot read plan {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"plan {path} is not valid JSON: {exc}") from exc


def _load_dataset(spec: DatasetSpec, strict: bool) -> Dataset:
    ds = load_csv(spec.path, spec.label_col, name=spec.name)
    for problem in check_manifest(ds, strict=strict):
        warnings.warn(f"manifest mismatch: {problem}")
    return ds


def run_cell(dataset: Dataset, optimizer: str, activation: str, run_index: int,
             plan: ExperimentPlan, out_dir: str | None = None) -> RunRecord:
    """Execute one seeded run of one cell; optionally persist artifacts.

    The run seed is base_seed + run_index. The best tree is the greatest
    hypervolume contributor of the final population on the training-error
    front; its test error is computed once, afterwards. The recorded
    hv_test is the final population's hypervolume on test-error points
    against the plan's fixed reference.
    """
    started = time.perf_counter()
    run_seed = plan.base_seed + run_index
    split_seed = run_seed if plan.resample_split else plan.base_seed
    train_idx, test_idx = split(
        dataset, SplitSpec(plan.train_fraction, split_seed, plan.stratified)
    )
    scaled, params = normalize(dataset, train_idx)
    X_train, y_train = scaled.features[train_idx], scaled.labels[train_idx]
    X_test, y_test = scaled.features[test_idx], scaled.labels[test_idx]

    cfg = plan.evolution_config(optimizer, activation, run_seed)
    result = evolve(X_train, y_train, dataset.n_classes, cfg)

    analysis = front_analysis(result.population, plan.hv_offset)
    best = analysis.best
    test_f1 = error_rate(best.tree, X_test, y_test)

    test_points = [
        (error_rate(ind.tree, X_test, y_test), ind.objectives[1])
        for ind in result.population
    ]
    hv_test = hypervolume_2d(
        ParetoArchive.from_points(test_points), HvReference(*plan.hv_ref)
    )

    record = RunRecord(
        dataset=dataset.name,
        optimizer=optimizer,
        activation=activation,
        seed=run_seed,
        best_tree_id=tree_id(best.tree),
        train_f1=float(best.objectives[0]),
        test_f1=test_f1,
        tree_size=int(best.objectives[1]),
        wall_time=time.perf_counter() - started,
        hv_test=hv_test,
    )

    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "trace.csv"), "w", encoding="utf-8") as fh:
            fh.write(result.trace[0].CSV_HEADER + "\n")
            for row in result.trace:
                fh.write(row.csv_row() + "\n")
        with open(os.path.join(out_dir, "front.csv"), "w", encoding="utf-8") as fh:
            fh.write("\n".join(front_csv_lines(analysis)) + "\n")
        model = Model(best.tree, params, dataset.encoders, dataset.class_names)
        save_model(model, os.path.join(out_dir, "best_tree.json"))
        with open(os.path.join(out_dir, "best_tree.dot"), "w", encoding="utf-8") as fh:
            fh.write(to_dot(best.tree))
        with open(os.path.join(out_dir, "record.json"), "w", encoding="utf-8") as fh:
            json.dump(
                {**record.__dict__, "run_index": run_index, "plan_hash": plan.plan_hash()},
                fh, sort_keys=True, indent=1,
            )
            fh.write("\n")
    return record


def _cell_dir(root: str, plan_hash: str, dataset: str, optimizer: str,
              activation: str, run_index: int) -> str:
    return os.path.join(root, plan_hash, dataset, f"{optimizer}-{activation}",
                        f"run{run_index}")


def _job(args: tuple) -> dict:
    """Worker entry point: executes one run and returns the record dict."""
    plan_dict, ds_name, optimizer, activation, run_index, out_dir = args
    plan = ExperimentPlan.from_dict(plan_dict)
    spec = next(s for s in plan.datasets if s.name == ds_name)
    dataset = _load_dataset(spec, plan.strict_manifest)
    record = run_cell(dataset, optimizer, activation, run_index, plan, out_dir)
    return dict(record.__dict__)


def _existing_record(out_dir: str, plan_hash: str) -> RunRecord | None:
    path = os.path.join(out_dir, "record.json")
    if not os.path.exists(path):
        return None
    try:
        with open(path, encoding="utf-8") as fh:
            d = json.load(fh)
        if d.get("plan_hash") != plan_hash:
            raise ConfigError(
                f"{path} belongs to plan {d.get('plan_hash')!r}, not {plan_hash!r}"
            )
        return RunRecord.from_dict(d)
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        warnings.warn(f"corrupt record {path} ({exc}); re-running")
        return None


@dataclass
class PlanResult:
    plan: ExperimentPlan
    records: list[RunRecord]
    failures: list[tuple[str, str]]  # (cell description, error message)
    run_dir: str


def run_plan(plan: ExperimentPlan, runs_root: str, workers: int = 1,
             resume: bool = False) -> PlanResult:
    """Execute every (cell, run) of the plan, skipping completed ones.

    Jobs are independent; records come back in a canonical order regardless
    of scheduling, so reports are identical for any worker count.
    """
    plan_hash = plan.plan_hash()
    plan_dir = os.path.join(runs_root, plan_hash)
    os.makedirs(plan_dir, exist_ok=True)
    plan_path = os.path.join(plan_dir, "plan.json")
    if os.path.exists(plan_path):
        if load_plan(plan_path).plan_hash() != plan_hash:
            raise ConfigError(f"{plan_dir} holds a different plan; refusing to mix runs")
    else:
        with open(plan_path, "w", encoding="utf-8") as fh:
            json.dump(plan.to_dict(), fh, sort_keys=True, indent=1)
            fh.write("\n")

    # Validate datasets up front so config errors surface before any work.
    for spec in plan.datasets:
        _load_dataset(spec, plan.strict_manifest)

    keys = [
        (spec.name, opt, act, i)
        for spec in plan.datasets
        for opt in plan.optimizers
        for act in plan.activations
        for i in range(plan.runs)
    ]
    done: dict[tuple, RunRecord] = {}
    pending = []
    for key in keys:
        out_dir = _cell_dir(runs_root, plan_hash, *key)
        if resume:
            existing = _existing_record(out_dir, plan_hash)
            if existing is not None:
                done[key] = existing
                continue
        pending.append((plan.to_dict(), key[0], key[1], key[2], key[3], out_dir))

    failures: list[tuple[str, str]] = []
    if pending:
        if workers <= 1:
            results = map(_job, pending)
            for args, outcome in zip(pending, _collect(results, pending)):
                _absorb(args, outcome, done, failures)
        else:
            with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
                results = pool.map(_job, pending)
                for args, outcome in zip(pending, _collect(results, pending)):
                    _absorb(args, outcome, done, failures)

    records = [done[key] for key in keys if key in done]
    return PlanResult(plan, records, failures, plan_dir)


def _collect(results, pending):
    """Drain a (possibly lazy) result iterator, capturing per-job errors."""
    it = iter(results)
    for _ in pending:
        try:
            yield next(it)
        except StopIteration:
            return
        except Exception as exc:  # job failure must not kill the plan
            yield exc


def _absorb(args, outcome, done, failures):
    key = (args[1], args[2], args[3], args[4])
    desc = f"{key[0]}/{key[1]}-{key[2]}/run{key[3]}"
    if isinstance(outcome, Exception):
        failures.append((desc, str(outcome)))
    else:
        done[key] = RunRecord.from_dict(outcome)


@dataclass(frozen=True)
class CellStats:
    runs: int
    mean_test_f1: float
    var_test_f1: float
    best_test_f1: float
    mean_train_f1: float
    mean_tree_size: float
    mean_hv_test: float


@dataclass(frozen=True)
class TTestRow:
    dataset: str
    activation: str
    baseline: str
    optimizer: str
    t_stat: float
    p_value: float
    significant: bool
    degenerate: bool


@dataclass
class AggregateReport:
    cells: dict[tuple[str, str, str], CellStats]  # (dataset, optimizer, activation)
    ttests: list[TTestRow]


def aggregate(records: Sequence[RunRecord], plan: ExperimentPlan) -> AggregateReport:
    """Fold records into per-cell statistics and baseline t-tests.

    Pure function of the record set: permuting the input changes nothing.
    Variances use the n-1 denominator (0.0 for a single run).
    """
    groups: dict[tuple[str, str, str], list[RunRecord]] = {}
    for rec in records:
        groups.setdefault((rec.dataset, rec.optimizer, rec.activation), []).append(rec)

    cells = {}
    for key in sorted(groups):
        rows = sorted(groups[key], key=lambda r: r.seed)
        test = [r.test_f1 for r in rows]
        # identical samples have exactly zero variance (no mean-rounding dust)
        spread = len(test) > 1 and min(test) != max(test)
        cells[key] = CellStats(
            runs=len(rows),
            mean_test_f1=float(np.mean(test)),
            var_test_f1=float(np.var(test, ddof=1)) if spread else 0.0,
            best_test_f1=float(min(test)),
            mean_train_f1=float(np.mean([r.train_f1 for r in rows])),
            mean_tree_size=float(np.mean([r.tree_size for r in rows])),
            mean_hv_test=float(np.mean([r.hv_test for r in rows])),
        )

    ttests = []
    base = plan.baseline_optimizer
    for (ds, opt, act) in sorted(cells):
        if opt == base:
            continue
        base_key = (ds, base, act)
        if base_key not in cells:
            continue
        base_rows = sorted(groups[base_key], key=lambda r: r.seed)
        other_rows = sorted(groups[(ds, opt, act)], key=lambda r: r.seed)
        if len(base_rows) < 2 or len(other_rows) < 2:
            continue
        result = welch_ttest([r.test_f1 for r in base_rows],
                             [r.test_f1 for r in other_rows])
        ttests.append(TTestRow(ds, act, base, opt, result.statistic, result.p_value,
                               result.p_value < ALPHA, result.degenerate))
    return AggregateReport(cells, ttests)


def write_records(records: Sequence[RunRecord], path: str) -> None:
    """Dump the raw records (header fixed). Lives outside report/ because
    wall_time varies between otherwise identical executions."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(RunRecord.CSV_HEADER + "\n")
        for rec in sorted(records, key=lambda r: (r.dataset, r.optimizer, r.activation, r.seed)):
            fh.write(rec.csv_row() + "\n")


def write_report(report: AggregateReport, plan: ExperimentPlan, report_dir: str) -> None:
    """Emit the aggregate tables as CSV files; byte-identical for identical
    records regardless of execution order or worker count."""
    os.makedirs(report_dir, exist_ok=True)
    datasets = sorted({k[0] for k in report.cells})
    activations = sorted({k[2] for k in report.cells})
    optimizers = [opt for opt in OPTIMIZERS if any(k[1] == opt for k in report.cells)]

    def cell(ds, opt, act):
        return report.cells.get((ds, opt, act))

    # Mean hypervolume per optimizer, one column each, with a trailing
    # cross-dataset average row per activation.
    with open(os.path.join(report_dir, "table2.csv"), "w", encoding="utf-8") as fh:
        fh.write("dataset,activation," + ",".join(optimizers) + "\n")
        for act in activations:
            columns = {opt: [] for opt in optimizers}
            for ds in datasets:
                vals = []
                for opt in optimizers:
                    c = cell(ds, opt, act)
                    vals.append("" if c is None else repr(c.mean_hv_test))
                    if c is not None:
                        columns[opt].append(c.mean_hv_test)
                fh.write(f"{ds},{act}," + ",".join(vals) + "\n")
            avgs = [
                repr(float(np.mean(columns[opt]))) if columns[opt] else ""
                for opt in optimizers
            ]
            fh.write(f"avg,{act}," + ",".join(avgs) + "\n")

    with open(os.path.join(report_dir, "table3.csv"), "w", encoding="utf-8") as fh:
        fh.write("dataset,activation,optimizer,runs,mean_test_f1,var_test_f1,best_test_f1\n")
        for (ds, opt, act), c in sorted(report.cells.items()):
            fh.write(
                f"{ds},{act},{opt},{c.runs},{c.mean_test_f1!r},"
                f"{c.var_test_f1!r},{c.best_test_f1!r}\n"
            )

    with open(os.path.join(report_dir, "table4.csv"), "w", encoding="utf-8") as fh:
        fh.write("dataset,activation,baseline,optimizer,t_stat,p_value,significant,degenerate\n")
        for row in report.ttests:
            fh.write(
                f"{row.dataset},{row.activation},{row.baseline},{row.optimizer},"
                f"{row.t_stat!r},{row.p_value!r},{int(row.significant)},{int(row.degenerate)}\n"
            )

    with open(os.path.join(report_dir, "table5.csv"), "w", encoding="utf-8") as fh:
        fh.write("dataset,activation,optimizer,mean_train_f1,mean_tree_size\n")
        for (ds, opt, act), c in sorted(report.cells.items()):
            fh.write(f"{ds},{act},{opt},{c.mean_train_f1!r},{c.mean_tree_size!r}\n")
