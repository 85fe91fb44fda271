"""Random tree generation and the genetic operators.

All operators are pure: given an explicit generator they are deterministic,
never touch their inputs (trees are immutable), and always return trees
that pass `tree.validate`. Structural repairs are retry-then-clone: invalid
draws are redrawn up to `max_retries` before falling back to the parent.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Sequence

import numpy as np

from .tree import (
    Activation,
    Internal,
    Leaf,
    NeuralTree,
    Node,
    iter_paths,
    replace_at,
    subtree_at,
    validate,
)


@dataclass(frozen=True)
class VariationConfig:
    """Knobs of the variation operators.

    Weights and biases are initialized uniformly in `weight_init` and stay
    unconstrained afterwards; `param_sigma` is the std-dev of the additive
    Gaussian parameter perturbation.
    """

    m_max: int = 5
    p_max: int = 10
    crossover_prob: float = 0.5
    mutation_prob: float = 0.5
    # With m_max 5 the grow process branches at (1 - leaf_prob) * 3.5 per
    # level; 0.75 keeps that subcritical so initial trees start small.
    leaf_prob: float = 0.75
    weight_init: tuple[float, float] = (-1.0, 1.0)
    param_sigma: float = 0.1
    max_retries: int = 10

    def __post_init__(self):
        if self.m_max < 2:
            raise ValueError("m_max must be at least 2")
        if self.p_max < 2:
            raise ValueError("p_max must be at least 2")
        for name in ("crossover_prob", "mutation_prob", "leaf_prob"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")


def _rand_params(j: int, cfg: VariationConfig, rng: np.random.Generator):
    lo, hi = cfg.weight_init
    weights = tuple(float(w) for w in rng.uniform(lo, hi, size=j))
    bias = float(rng.uniform(lo, hi))
    return weights, bias


def _grow(depth: int, d: int, cfg: VariationConfig, activation: Activation,
          rng: np.random.Generator, force_internal: bool = False) -> Node:
    """Grow a node at `depth`; leaves become mandatory at depth p_max."""
    if not force_internal and (depth >= cfg.p_max or rng.random() < cfg.leaf_prob):
        return Leaf(int(rng.integers(d)))
    arity = int(rng.integers(2, cfg.m_max + 1))
    children = tuple(_grow(depth + 1, d, cfg, activation, rng) for _ in range(arity))
    weights, bias = _rand_params(arity, cfg, rng)
    return Internal(children, weights, bias, activation)


def random_tree(r: int, d: int, cfg: VariationConfig, activation: Activation,
                rng: np.random.Generator) -> NeuralTree:
    """Grow a valid random tree: r internal class subtrees over d features."""
    if r < 2:
        raise ValueError("need at least 2 classes")
    if d < 1:
        raise ValueError("need at least 1 feature")
    subs = tuple(
        _grow(1, d, cfg, activation, rng, force_internal=True) for _ in range(r)
    )
    return NeuralTree(subs, d, cfg.m_max, cfg.p_max)


def crossover(a: NeuralTree, b: NeuralTree, cfg: VariationConfig,
              rng: np.random.Generator) -> tuple[NeuralTree, NeuralTree]:
    """Swap one uniformly chosen non-root subtree between the parents.

    Offspring violating the height bound or the internal-root-child rule
    trigger a redraw of both crossover points; exhausted retries return the
    parents unchanged.
    """
    paths_a = [p for p, _ in iter_paths(a)]
    paths_b = [p for p, _ in iter_paths(b)]
    for _ in range(cfg.max_retries + 1):
        pa = paths_a[int(rng.integers(len(paths_a)))]
        pb = paths_b[int(rng.integers(len(paths_b)))]
        sub_a = subtree_at(a, pa)
        sub_b = subtree_at(b, pb)
        child_a = replace_at(a, pa, sub_b)
        child_b = replace_at(b, pb, sub_a)
        if not validate(child_a) and not validate(child_b):
            return child_a, child_b
    return a, b


def _perturb(node: Node, sigma: float, rng: np.random.Generator) -> Node:
    if isinstance(node, Leaf):
        return node
    weights = tuple(float(w + rng.normal(0.0, sigma)) for w in node.weights)
    bias = float(node.bias + rng.normal(0.0, sigma))
    children = tuple(_perturb(c, sigma, rng) for c in node.children)
    return Internal(children, weights, bias, node.activation)


def _leaf_paths(t: NeuralTree) -> list[tuple[int, ...]]:
    return [p for p, n in iter_paths(t) if isinstance(n, Leaf)]


def _tree_activation(t: NeuralTree) -> Activation:
    return t.class_subtrees[0].activation


def _mutate_delete_leaf(t: NeuralTree, cfg, rng) -> NeuralTree | None:
    # Only leaves whose parent keeps >= 2 children afterwards are removable.
    eligible = []
    for path in _leaf_paths(t):
        parent = subtree_at(t, path[:-1])
        if isinstance(parent, Internal) and len(parent.children) >= 3:
            eligible.append(path)
    if not eligible:
        return None
    path = eligible[int(rng.integers(len(eligible)))]
    parent_path, idx = path[:-1], path[-1]
    parent = subtree_at(t, parent_path)
    assert isinstance(parent, Internal)
    children = parent.children[:idx] + parent.children[idx + 1:]
    weights = parent.weights[:idx] + parent.weights[idx + 1:]
    return replace_at(t, parent_path, Internal(children, weights, parent.bias, parent.activation))


def _mutate_replace_leaf(t: NeuralTree, cfg, rng) -> NeuralTree | None:
    paths = _leaf_paths(t)
    path = paths[int(rng.integers(len(paths)))]
    leaf = subtree_at(t, path)
    assert isinstance(leaf, Leaf)
    d = t.n_features
    if d < 2:
        return t  # no distinct feature exists; size-preserving no-op
    new = int(rng.integers(d - 1))
    if new >= leaf.feature:
        new += 1
    return replace_at(t, path, Leaf(new))


def _mutate_replace_function(t: NeuralTree, cfg, rng) -> NeuralTree | None:
    targets = [p for p, n in iter_paths(t) if isinstance(n, Internal)]
    path = targets[int(rng.integers(len(targets)))]
    is_root_child = len(path) == 1
    # Root children stay internal, so they only ever get a fresh subtree.
    as_leaf = (not is_root_child) and rng.random() < 0.5
    if as_leaf:
        replacement: Node = Leaf(int(rng.integers(t.n_features)))
    else:
        replacement = _grow(len(path), t.n_features, cfg, _tree_activation(t), rng,
                            force_internal=True)
    return replace_at(t, path, replacement)


def _mutate_perturb(t: NeuralTree, cfg, rng) -> NeuralTree:
    subs = tuple(_perturb(sub, cfg.param_sigma, rng) for sub in t.class_subtrees)
    return NeuralTree(subs, t.n_features, t.m_max, t.p_max)


_MUTATION_FORMS = (
    _mutate_delete_leaf,
    _mutate_replace_leaf,
    _mutate_replace_function,
    _mutate_perturb,
)


def mutate(t: NeuralTree, cfg: VariationConfig, rng: np.random.Generator) -> NeuralTree:
    """Apply one mutation form chosen uniformly among four.

    Forms: delete a leaf, replace a leaf's feature, replace an internal
    node by a leaf or fresh subtree, or perturb every weight and bias with
    Gaussian noise. Inapplicable or invalid draws redraw the form up to
    `max_retries` times, then fall back to returning the input tree.
    """
    for _ in range(cfg.max_retries + 1):
        form = _MUTATION_FORMS[int(rng.integers(len(_MUTATION_FORMS)))]
        result = form(t, cfg, rng)
        if result is not None and not validate(result):
            return result
    return t


def make_offspring(parents: Sequence, count: int, cfg: VariationConfig,
                   rng: np.random.Generator,
                   select: Callable[[np.random.Generator], Any]) -> list[NeuralTree]:
    """Produce exactly `count` offspring trees from selected parents.

    With probability `crossover_prob` a step crosses two selected parents
    (each child then mutated with probability `mutation_prob`); otherwise
    it mutates one selected parent. `select` returns an individual with a
    `tree` attribute.
    """
    if not parents:
        raise ValueError("make_offspring: empty parent population")
    out: list[NeuralTree] = []
    while len(out) < count:
        if rng.random() < cfg.crossover_prob:
            pa = select(rng).tree
            pb = select(rng).tree
            for child in crossover(pa, pb, cfg, rng):
                if rng.random() < cfg.mutation_prob:
                    child = mutate(child, cfg, rng)
                out.append(child)
        else:
            out.append(mutate(select(rng).tree, cfg, rng))
    return out[:count]
