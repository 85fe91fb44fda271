"""Evolutionary engine with three survival strategies.

One generation loop serves all three optimizers: selection, offspring
generation, combination of parents and offspring, then survival. The
strategies differ only in survival (and in parent selection, where each
uses its canonical operator):

* ``gp``    - sort the combined population on error-rate alone.
* ``nsga2`` - non-dominated sorting with crowding-distance elitism.
* ``nsga3`` - non-dominated sorting with reference-point niching on the
  normalized objective simplex.

Objectives are minimized as the pair (training error-rate, tree size).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .metrics import error_rate
from .rng import EVOLVE_STREAM, rng_stream
from .tree import Activation, NeuralTree, tree_size
from .variation import VariationConfig, make_offspring, random_tree

OPTIMIZERS = ("gp", "nsga2", "nsga3")

Objectives = tuple[float, float]  # (error_rate, tree_size), both minimized


@dataclass
class Individual:
    """A tree with its objectives and per-generation selection metadata."""

    tree: NeuralTree
    objectives: Objectives | None = None
    rank: int | None = None
    crowding: float | None = None
    niche: int | None = None


def dominates(a: Objectives, b: Objectives) -> bool:
    """True iff a is no worse in both objectives and strictly better in one."""
    return a[0] <= b[0] and a[1] <= b[1] and (a[0] < b[0] or a[1] < b[1])


def fast_nondominated_sort(pop: Sequence[Individual]) -> list[list[int]]:
    """Partition a population into Pareto fronts (lists of indices).

    Front 0 is the non-dominated set; front k is what becomes non-dominated
    once fronts < k are removed. Sets each individual's `rank`.
    """
    n = len(pop)
    objs = [ind.objectives for ind in pop]
    dominated_by: list[list[int]] = [[] for _ in range(n)]
    counts = [0] * n
    fronts: list[list[int]] = [[]]
    for i in range(n):
        for j in range(i + 1, n):
            if dominates(objs[i], objs[j]):
                dominated_by[i].append(j)
                counts[j] += 1
            elif dominates(objs[j], objs[i]):
                dominated_by[j].append(i)
                counts[i] += 1
        if counts[i] == 0:
            pop[i].rank = 0
            fronts[0].append(i)
    k = 0
    while fronts[k]:
        nxt = []
        for i in fronts[k]:
            for j in dominated_by[i]:
                counts[j] -= 1
                if counts[j] == 0:
                    pop[j].rank = k + 1
                    nxt.append(j)
        k += 1
        fronts.append(nxt)
    fronts.pop()
    return fronts


def crowding_distance(front: Sequence[Individual]) -> list[float]:
    """NSGA-II density estimate along one front; boundaries get infinity.

    Interior individuals accumulate the normalized gap between their
    neighbors per objective; a zero objective range contributes nothing.
    Sets each individual's `crowding`.
    """
    n = len(front)
    dist = [0.0] * n
    for m in range(2):
        order = sorted(range(n), key=lambda i: front[i].objectives[m])
        dist[order[0]] = dist[order[-1]] = math.inf
        lo = front[order[0]].objectives[m]
        hi = front[order[-1]].objectives[m]
        span = hi - lo
        if span == 0.0:
            continue
        for pos in range(1, n - 1):
            i = order[pos]
            if dist[i] != math.inf:
                gap = front[order[pos + 1]].objectives[m] - front[order[pos - 1]].objectives[m]
                dist[i] += gap / span
    for ind, d in zip(front, dist):
        ind.crowding = d
    return dist


@dataclass(frozen=True)
class ReferencePointSet:
    """Uniform lattice points on the unit simplex used by nsga3 niching."""

    n_objectives: int
    divisions: int
    points: np.ndarray  # (count, n_objectives), rows sum to 1


def das_dennis_points(n_objectives: int, divisions: int) -> ReferencePointSet:
    """All simplex lattice points with coordinates i/divisions summing to 1.

    Emitted in deterministic lexicographic order (first coordinate
    descending); the count is C(divisions + M - 1, M - 1).
    """
    if n_objectives < 2:
        raise ValueError("need at least 2 objectives")
    if divisions < 1:
        raise ValueError("need at least 1 division")

    def compositions(total: int, parts: int):
        if parts == 1:
            yield (total,)
            return
        for head in range(total, -1, -1):
            for rest in compositions(total - head, parts - 1):
                yield (head,) + rest

    pts = np.array(
        [comp for comp in compositions(divisions, n_objectives)], dtype=np.float64
    ) / divisions
    return ReferencePointSet(n_objectives, divisions, pts)


def normalize_objectives(pop: Sequence[Individual]) -> np.ndarray:
    """Shift by the per-objective minimum and divide by the population range.

    A zero range divides by 1, leaving that coordinate at 0. Output lies
    in [0, 1]^2.
    """
    objs = np.array([ind.objectives for ind in pop], dtype=np.float64)
    lo = objs.min(axis=0)
    span = objs.max(axis=0) - lo
    span[span == 0.0] = 1.0
    return (objs - lo) / span


def _associate(normalized: np.ndarray, refs: ReferencePointSet) -> tuple[np.ndarray, np.ndarray]:
    """Per individual: index of the closest reference ray and the
    perpendicular distance to it."""
    w = refs.points  # (R, M)
    norm_sq = np.sum(w * w, axis=1)  # rays never degenerate for H >= 1
    proj = normalized @ w.T / norm_sq  # (N, R) projection coefficients
    # squared perpendicular distance: |z|^2 - proj^2 * |w|^2
    z_sq = np.sum(normalized * normalized, axis=1, keepdims=True)
    d_sq = np.maximum(z_sq - proj**2 * norm_sq[None, :], 0.0)
    niches = np.argmin(d_sq, axis=1)
    dists = np.sqrt(d_sq[np.arange(len(normalized)), niches])
    return niches, dists


def associate_and_niche(accepted: Sequence[Individual], last_front: Sequence[Individual],
                        refs: ReferencePointSet, k: int,
                        rng: np.random.Generator) -> list[Individual]:
    """Choose k members of the overflowing front by niche preservation.

    Everyone (accepted + last front) is normalized together and associated
    to the reference ray with minimal perpendicular distance. Niche counts
    come from the accepted individuals; the emptiest niche (random
    tie-break) repeatedly contributes its closest unchosen member when the
    niche is empty, or a random one otherwise.
    """
    if k > len(last_front):
        raise ValueError("k exceeds the size of the last front")
    if k == len(last_front):
        return list(last_front)

    everyone = list(accepted) + list(last_front)
    normalized = normalize_objectives(everyone)
    niches, dists = _associate(normalized, refs)
    norms = np.sqrt(np.sum(normalized * normalized, axis=1))
    for ind, niche in zip(everyone, niches):
        ind.niche = int(niche)

    n_acc = len(accepted)
    counts = np.zeros(len(refs.points), dtype=np.int64)
    for niche in niches[:n_acc]:
        counts[niche] += 1

    last_niches = niches[n_acc:]
    last_dists = dists[n_acc:]
    last_norms = norms[n_acc:]
    unchosen = set(range(len(last_front)))
    active = np.ones(len(refs.points), dtype=bool)
    chosen: list[Individual] = []
    while len(chosen) < k:
        active_idx = np.flatnonzero(active)
        min_count = counts[active_idx].min()
        pool = active_idx[counts[active_idx] == min_count]
        j = int(pool[rng.integers(len(pool))])
        members = [i for i in unchosen if last_niches[i] == j]
        if not members:
            active[j] = False
            continue
        if counts[j] == 0:
            pick = min(members, key=lambda i: (last_dists[i], last_norms[i], i))
        else:
            pick = members[int(rng.integers(len(members)))]
        unchosen.discard(pick)
        chosen.append(last_front[pick])
        counts[j] += 1
    return chosen


def survive_gp(R: Sequence[Individual], target: int) -> list[Individual]:
    """Keep the `target` best by error-rate (ties: smaller size, stable)."""
    if len(R) < target:
        raise ValueError("population smaller than survival target")
    order = sorted(range(len(R)), key=lambda i: (R[i].objectives[0], R[i].objectives[1], i))
    return [R[i] for i in order[:target]]


def survive_nsga2(R: Sequence[Individual], target: int,
                  rng: np.random.Generator) -> list[Individual]:
    """Fill by whole fronts; split the overflowing front by crowding."""
    if len(R) < target:
        raise ValueError("population smaller than survival target")
    survivors: list[Individual] = []
    for front_idx in fast_nondominated_sort(R):
        front = [R[i] for i in front_idx]
        crowding_distance(front)
        if len(survivors) + len(front) <= target:
            survivors.extend(front)
            if len(survivors) == target:
                break
            continue
        # Random tie-break: shuffle, then stable-sort by descending crowding.
        order = list(rng.permutation(len(front)))
        order.sort(key=lambda i: -front[i].crowding)
        survivors.extend(front[i] for i in order[: target - len(survivors)])
        break
    return survivors


def survive_nsga3(R: Sequence[Individual], target: int, refs: ReferencePointSet,
                  rng: np.random.Generator) -> list[Individual]:
    """Fill by whole fronts; resolve the overflowing front by niching."""
    if len(R) < target:
        raise ValueError("population smaller than survival target")
    survivors: list[Individual] = []
    for front_idx in fast_nondominated_sort(R):
        front = [R[i] for i in front_idx]
        if len(survivors) + len(front) <= target:
            survivors.extend(front)
            if len(survivors) == target:
                break
            continue
        survivors.extend(
            associate_and_niche(survivors, front, refs, target - len(survivors), rng)
        )
        break
    return survivors


@dataclass(frozen=True)
class EvolutionConfig:
    population_size: int = 50
    generations: int = 100
    optimizer: str = "nsga3"
    divisions: int = 10  # reference-point divisions per objective axis
    activation: Activation = Activation.GAUSSIAN
    variation: VariationConfig = field(default_factory=VariationConfig)
    seed: int = 0

    def __post_init__(self):
        if self.population_size < 4 or self.population_size % 2:
            raise ValueError("population_size must be even and at least 4")
        if self.generations < 0:
            raise ValueError("generations must be nonnegative")
        if self.optimizer not in OPTIMIZERS:
            raise ValueError(f"optimizer must be one of {OPTIMIZERS}")


@dataclass(frozen=True)
class GenerationStats:
    """One trace row; `front` is the generation's non-dominated objectives."""

    generation: int
    best_f1: float
    mean_f1: float
    best_f2: float
    front0_size: int
    front: tuple[Objectives, ...]

    CSV_HEADER = "generation,best_f1,mean_f1,best_f2,front0_size"

    def csv_row(self) -> str:
        return (
            f"{self.generation},{self.best_f1!r},{self.mean_f1!r},"
            f"{self.best_f2!r},{self.front0_size}"
        )


@dataclass
class EvolveResult:
    population: list[Individual]
    trace: list[GenerationStats]


def _evaluate(pop: Sequence[Individual], X: np.ndarray, y: np.ndarray) -> None:
    # Objectives of carried-over individuals are reused exactly.
    for ind in pop:
        if ind.objectives is None:
            ind.objectives = (error_rate(ind.tree, X, y), float(tree_size(ind.tree)))


def _stats(generation: int, pop: Sequence[Individual]) -> GenerationStats:
    errs = [ind.objectives[0] for ind in pop]
    sizes = [ind.objectives[1] for ind in pop]
    front_idx = fast_nondominated_sort(pop)[0]
    front = tuple(sorted(pop[i].objectives for i in front_idx))
    return GenerationStats(
        generation=generation,
        best_f1=min(errs),
        mean_f1=sum(errs) / len(errs),
        best_f2=min(sizes),
        front0_size=len(front_idx),
        front=front,
    )


def _tournament_gp(pop: Sequence[Individual]) -> Callable:
    def select(rng: np.random.Generator) -> Individual:
        i, j = rng.integers(len(pop)), rng.integers(len(pop))
        a, b = pop[int(i)], pop[int(j)]
        return a if a.objectives[0] <= b.objectives[0] else b

    return select


def _tournament_nsga2(pop: Sequence[Individual]) -> Callable:
    def select(rng: np.random.Generator) -> Individual:
        i, j = rng.integers(len(pop)), rng.integers(len(pop))
        a, b = pop[int(i)], pop[int(j)]
        ka = (a.rank, -(a.crowding if a.crowding is not None else 0.0))
        kb = (b.rank, -(b.crowding if b.crowding is not None else 0.0))
        return a if ka <= kb else b

    return select


def _uniform(pop: Sequence[Individual]) -> Callable:
    def select(rng: np.random.Generator) -> Individual:
        return pop[int(rng.integers(len(pop)))]

    return select


def _refresh_metadata(pop: list[Individual]) -> None:
    for front_idx in fast_nondominated_sort(pop):
        crowding_distance([pop[i] for i in front_idx])


def evolve(X: np.ndarray, y: np.ndarray, n_classes: int,
           cfg: EvolutionConfig) -> EvolveResult:
    """Run the full generational loop on one training split.

    Each generation selects parents, generates an offspring population of
    the same size, evaluates the new trees on the training data, and
    applies the configured survival strategy to the combined population.
    The trace records per-generation best/mean statistics and the
    non-dominated front.
    """
    rng = rng_stream(cfg.seed, EVOLVE_STREAM)
    d = X.shape[1]
    refs = das_dennis_points(2, cfg.divisions) if cfg.optimizer == "nsga3" else None

    pop = [
        Individual(random_tree(n_classes, d, cfg.variation, cfg.activation, rng))
        for _ in range(cfg.population_size)
    ]
    _evaluate(pop, X, y)
    _refresh_metadata(pop)
    trace = [_stats(0, pop)]

    for g in range(1, cfg.generations + 1):
        if cfg.optimizer == "gp":
            select = _tournament_gp(pop)
        elif cfg.optimizer == "nsga2":
            select = _tournament_nsga2(pop)
        else:
            select = _uniform(pop)
        offspring = make_offspring(pop, cfg.population_size, cfg.variation, rng, select)
        Q = [Individual(t) for t in offspring]
        _evaluate(Q, X, y)
        R = list(pop) + Q
        if cfg.optimizer == "gp":
            pop = survive_gp(R, cfg.population_size)
        elif cfg.optimizer == "nsga2":
            pop = survive_nsga2(R, cfg.population_size, rng)
        else:
            pop = survive_nsga3(R, cfg.population_size, refs, rng)
        if cfg.optimizer == "nsga2":
            _refresh_metadata(pop)
        trace.append(_stats(g, pop))

    return EvolveResult(pop, trace)
