"""Two-dimensional hypervolume indicator and greatest-contributor selection.

The indicator measures the objective-space area a Pareto front dominates
inside the box bounded below-left by the front and above-right by a
reference point; larger is better. The front member whose removal costs
the most area (the greatest contributor) is used to pick a single tree
out of a population.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .moea import Individual, dominates, fast_nondominated_sort

Point = tuple[float, float]


@dataclass(frozen=True)
class HvReference:
    """Upper-right corner of the measured box (worst error, worst size)."""

    ref_f1: float = 1.0
    ref_f2: float = 100.0

    def contains(self, p: Point) -> bool:
        return p[0] < self.ref_f1 and p[1] < self.ref_f2


@dataclass
class ParetoArchive:
    """Mutually non-dominated objective points with individual back-refs.

    Deduplicated on exact (f1, f2) equality; `members[i]` is None when the
    archive was built from bare points.
    """

    points: list[Point]
    members: list[Individual | None]

    def __len__(self) -> int:
        return len(self.points)

    @classmethod
    def from_points(cls, points: Sequence[Point]) -> "ParetoArchive":
        """Build an archive from raw points, dropping dominated duplicates."""
        kept: list[Point] = []
        for p in points:
            p = (float(p[0]), float(p[1]))
            if any(dominates(q, p) or q == p for q in kept):
                continue
            kept = [q for q in kept if not dominates(p, q)]
            kept.append(p)
        return cls(kept, [None] * len(kept))


def extract_front(pop: Sequence[Individual]) -> ParetoArchive:
    """Front 0 of the population, deduplicated on exact objective equality."""
    front_idx = fast_nondominated_sort(pop)[0]
    seen: set[Point] = set()
    points: list[Point] = []
    members: list[Individual | None] = []
    for i in front_idx:
        p = (float(pop[i].objectives[0]), float(pop[i].objectives[1]))
        if p in seen:
            continue
        seen.add(p)
        points.append(p)
        members.append(pop[i])
    return ParetoArchive(points, members)


def clamped_points(archive: ParetoArchive, ref: HvReference) -> list[int]:
    """Indices of archive points outside the reference box (contribute 0)."""
    return [i for i, p in enumerate(archive.points) if not ref.contains(p)]


def hypervolume_2d(archive: ParetoArchive, ref: HvReference) -> float:
    """Dominated area inside the reference box, by an ascending-f1 sweep.

    Points outside the box contribute nothing (their in-box area is empty).
    """
    if not archive.points:
        raise ValueError("hypervolume of an empty archive")
    inside = sorted(p for p in archive.points if ref.contains(p))
    area = 0.0
    prev_f2 = ref.ref_f2
    for f1, f2 in inside:
        if f2 >= prev_f2:
            continue  # dominated in-box by the previous point
        area += (ref.ref_f1 - f1) * (prev_f2 - f2)
        prev_f2 = f2
    return area


def exclusive_contributions(archive: ParetoArchive, ref: HvReference) -> list[float]:
    """Leave-one-out hypervolume loss per point; all nonnegative."""
    if not archive.points:
        raise ValueError("contributions of an empty archive")
    if len(archive.points) == 1:
        return [hypervolume_2d(archive, ref)]
    total = hypervolume_2d(archive, ref)
    out = []
    for i in range(len(archive.points)):
        rest = ParetoArchive(
            archive.points[:i] + archive.points[i + 1:],
            archive.members[:i] + archive.members[i + 1:],
        )
        out.append(max(total - hypervolume_2d(rest, ref), 0.0))
    return out


@dataclass
class FrontAnalysis:
    """The pieces of a greatest-contributor selection, for export."""

    archive: ParetoArchive
    ref: HvReference
    contributions: list[float]
    best_index: int
    degenerate: bool  # greatest contribution is zero (e.g. offset 0)

    @property
    def best(self) -> Individual | None:
        return self.archive.members[self.best_index]


def front_analysis(pop: Sequence[Individual], offset: float = 0.1) -> FrontAnalysis:
    """Contribution analysis against a population-derived reference point.

    The reference is the population-wide maximum of each objective plus
    `offset` on both axes; the greatest contributor breaks ties toward
    smaller error, then smaller size.
    """
    if not pop:
        raise ValueError("front_analysis of an empty population")
    ref = HvReference(
        max(ind.objectives[0] for ind in pop) + offset,
        max(ind.objectives[1] for ind in pop) + offset,
    )
    archive = extract_front(pop)
    contributions = exclusive_contributions(archive, ref)
    best_index = min(
        range(len(archive)),
        key=lambda i: (-contributions[i], archive.points[i][0], archive.points[i][1]),
    )
    return FrontAnalysis(archive, ref, contributions, best_index,
                         degenerate=contributions[best_index] == 0.0)


def greatest_contributor(pop: Sequence[Individual], offset: float = 0.1) -> Individual:
    """The front member covering the largest exclusive area; see
    `front_analysis` for the reference-point construction."""
    return front_analysis(pop, offset).best


def compare_optimizers_hv(fronts: Mapping[str, ParetoArchive],
                          ref: HvReference = HvReference()) -> dict[str, float]:
    """Hypervolume of each optimizer's front on one shared reference frame."""
    return {name: hypervolume_2d(archive, ref) for name, archive in fronts.items()}


def front_csv_lines(analysis: FrontAnalysis) -> list[str]:
    """Archive + contributions as CSV rows (feeds scatter plots)."""
    lines = ["f1,f2,contribution,is_greatest"]
    for i, ((f1, f2), c) in enumerate(zip(analysis.archive.points, analysis.contributions)):
        lines.append(f"{f1!r},{f2!r},{c!r},{int(i == analysis.best_index)}")
    return lines
