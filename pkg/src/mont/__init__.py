"""Multi-output neural trees evolved by GP, NSGA-II, or NSGA-III.

A classifier is a rooted tree whose internal nodes are small neurons and
whose leaves read input features; one subtree per class scores that class,
and evolution minimizes training error-rate and tree size together.
Hypervolume-indicator analysis picks the single best trade-off out of the
final population.
"""

from .dataset import Dataset, SplitSpec, load_csv, normalize, split
from .harness import ExperimentPlan, aggregate, run_cell, run_plan
from .hypervolume import (
    HvReference,
    ParetoArchive,
    compare_optimizers_hv,
    exclusive_contributions,
    extract_front,
    greatest_contributor,
    hypervolume_2d,
)
from .metrics import RunRecord, confusion, error_rate, roc_points, welch_ttest
from .moea import (
    EvolutionConfig,
    Individual,
    crowding_distance,
    das_dennis_points,
    dominates,
    evolve,
    fast_nondominated_sort,
)
from .tree import (
    Activation,
    Internal,
    Leaf,
    NeuralTree,
    class_scores,
    evaluate_node,
    predict,
    to_dot,
    tree_height,
    tree_size,
    validate,
)
from .variation import VariationConfig, crossover, make_offspring, mutate, random_tree

__version__ = "0.1.0"

__all__ = [
    "Activation",
    "Dataset",
    "EvolutionConfig",
    "ExperimentPlan",
    "HvReference",
    "Individual",
    "Internal",
    "Leaf",
    "NeuralTree",
    "ParetoArchive",
    "RunRecord",
    "SplitSpec",
    "VariationConfig",
    "aggregate",
    "class_scores",
    "compare_optimizers_hv",
    "confusion",
    "crossover",
    "crowding_distance",
    "das_dennis_points",
    "dominates",
    "error_rate",
    "evaluate_node",
    "evolve",
    "exclusive_contributions",
    "extract_front",
    "fast_nondominated_sort",
    "greatest_contributor",
    "hypervolume_2d",
    "load_csv",
    "make_offspring",
    "mutate",
    "normalize",
    "predict",
    "random_tree",
    "roc_points",
    "run_cell",
    "run_plan",
    "split",
    "to_dot",
    "tree_height",
    "tree_size",
    "validate",
    "welch_ttest",
]
