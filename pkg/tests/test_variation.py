import copy

import numpy as np
import pytest
from util import minimal_tree

from mont.moea import Individual
from mont.rng import rng_stream
from mont.tree import (
    Activation,
    Leaf,
    iter_paths,
    tree_height,
    tree_size,
    validate,
)
from mont.variation import (
    VariationConfig,
    _mutate_delete_leaf,
    _mutate_perturb,
    _mutate_replace_function,
    _mutate_replace_leaf,
    crossover,
    make_offspring,
    mutate,
    random_tree,
)

CFG = VariationConfig()


class ScriptedRng:
    """Deterministic stand-in yielding pre-chosen integer draws."""

    def __init__(self, integer_draws, random_draws=()):
        self._ints = list(integer_draws)
        self._rands = list(random_draws)

    def integers(self, *args, **kwargs):
        return self._ints.pop(0)

    def random(self):
        return self._rands.pop(0) if self._rands else 0.0


def test_random_tree_minimal_case():
    # leaf_prob 1 and m_max 2 force the one legal 7-node shape for r=2
    cfg = VariationConfig(m_max=2, leaf_prob=1.0)
    t = random_tree(2, 4, cfg, Activation.SIGMOID, rng_stream(1))
    assert tree_size(t) == 7
    assert tree_height(t) == 2
    assert validate(t) == []


def test_random_tree_always_valid():
    rng = rng_stream(2)
    for _ in range(200):
        t = random_tree(int(rng.integers(2, 6)), int(rng.integers(1, 9)), CFG,
                        Activation.GAUSSIAN, rng)
        assert validate(t) == []


def test_random_tree_height_cap():
    # aggressive growth constantly hits the forced-leaf depth
    cfg = VariationConfig(leaf_prob=0.3, p_max=5)
    rng = rng_stream(3)
    heights = [tree_height(random_tree(2, 4, cfg, Activation.TANH, rng))
               for _ in range(200)]
    assert max(heights) == 5


def test_crossover_class_subtree_swap_keeps_arity():
    rng = rng_stream(4)
    a = random_tree(3, 4, CFG, Activation.SIGMOID, rng)
    b = random_tree(3, 4, CFG, Activation.SIGMOID, rng)
    paths_a = [p for p, _ in iter_paths(a)]
    paths_b = [p for p, _ in iter_paths(b)]
    scripted = ScriptedRng([paths_a.index((0,)), paths_b.index((1,))])
    child_a, child_b = crossover(a, b, CFG, scripted)
    assert child_a.n_classes == 3 and child_b.n_classes == 3
    assert validate(child_a) == [] and validate(child_b) == []
    assert child_a.class_subtrees[0] == b.class_subtrees[1]


def test_crossover_identical_leaves_returns_equal_parents():
    a = minimal_tree(d=1)
    b = minimal_tree(d=1)
    paths = [p for p, _ in iter_paths(a)]
    leaf_idx = paths.index((0, 0))
    child_a, child_b = crossover(a, b, CFG, ScriptedRng([leaf_idx, leaf_idx]))
    assert child_a == a and child_b == b


def test_crossover_retries_exhausted_returns_clones():
    a = minimal_tree()
    b = minimal_tree()
    paths = [p for p, _ in iter_paths(a)]
    root_child = paths.index((0,))
    leaf = paths.index((0, 0))
    # every draw pairs a root child with a leaf: always invalid
    draws = [root_child, leaf] * (CFG.max_retries + 1)
    child_a, child_b = crossover(a, b, CFG, ScriptedRng(draws))
    assert child_a == a and child_b == b


def test_crossover_purity_and_height_bound():
    rng = rng_stream(5)
    for _ in range(100):
        a = random_tree(2, 4, CFG, Activation.SIGMOID, rng)
        b = random_tree(2, 4, CFG, Activation.SIGMOID, rng)
        snap_a, snap_b = copy.deepcopy(a), copy.deepcopy(b)
        ca, cb = crossover(a, b, CFG, rng)
        assert a == snap_a and b == snap_b
        assert tree_height(ca) <= CFG.p_max and tree_height(cb) <= CFG.p_max
        assert validate(ca) == [] and validate(cb) == []


def test_delete_leaf_reduces_size_by_one():
    rng = rng_stream(6)
    hits = 0
    for _ in range(50):
        t = random_tree(2, 4, CFG, Activation.SIGMOID, rng)
        out = _mutate_delete_leaf(t, CFG, rng)
        if out is not None:
            hits += 1
            assert tree_size(out) == tree_size(t) - 1
            assert validate(out) == []
    assert hits > 0


def test_delete_leaf_respects_arity_floor():
    # every parent in the minimal tree has exactly 2 children
    assert _mutate_delete_leaf(minimal_tree(), CFG, rng_stream(7)) is None


def test_replace_leaf_preserves_size_and_changes_feature():
    rng = rng_stream(8)
    t = minimal_tree(d=4)
    for _ in range(20):
        out = _mutate_replace_leaf(t, CFG, rng)
        assert tree_size(out) == 7
        changed = [
            (p, n) for (p, n) in iter_paths(out)
            if isinstance(n, Leaf) and n != dict(iter_paths(t))[p]
        ]
        assert len(changed) == 1  # new feature is always distinct when d >= 2


def test_replace_function_keeps_tree_valid():
    rng = rng_stream(9)
    for _ in range(100):
        t = random_tree(3, 4, CFG, Activation.SIGMOID, rng)
        out = _mutate_replace_function(t, CFG, rng)
        assert validate(out) == []
        assert out.n_classes == 3


def test_perturb_zero_sigma_is_identity():
    t = random_tree(2, 4, CFG, Activation.SIGMOID, rng_stream(10))
    out = _mutate_perturb(t, VariationConfig(param_sigma=0.0), rng_stream(11))
    assert out == t


def test_perturb_changes_only_parameters():
    t = random_tree(2, 4, CFG, Activation.SIGMOID, rng_stream(12))
    out = _mutate_perturb(t, CFG, rng_stream(13))
    assert tree_size(out) == tree_size(t)
    assert [p for p, _ in iter_paths(out)] == [p for p, _ in iter_paths(t)]
    assert out != t


def test_mutate_closure_and_purity():
    rng = rng_stream(14)
    for _ in range(300):
        t = random_tree(2, 5, CFG, Activation.GAUSSIAN, rng)
        snap = copy.deepcopy(t)
        out = mutate(t, CFG, rng)
        assert t == snap
        assert validate(out) == []
        assert tree_height(out) <= CFG.p_max


def test_mutate_on_minimal_tree_stays_legal():
    rng = rng_stream(15)
    for _ in range(100):
        out = mutate(minimal_tree(), CFG, rng)
        assert validate(out) == []


def test_operator_determinism():
    def offspring_sequence(seed):
        rng = rng_stream(seed)
        pop = [Individual(random_tree(2, 4, CFG, Activation.SIGMOID, rng))
               for _ in range(6)]
        select = lambda r: pop[int(r.integers(len(pop)))]
        return make_offspring(pop, 20, CFG, rng, select)

    assert offspring_sequence(42) == offspring_sequence(42)
    assert offspring_sequence(42) != offspring_sequence(43)


def test_make_offspring_mutation_only():
    rng = rng_stream(16)
    pop = [Individual(random_tree(2, 4, CFG, Activation.SIGMOID, rng)) for _ in range(4)]
    cfg = VariationConfig(crossover_prob=0.0, mutation_prob=1.0)
    calls = {"n": 0}

    def select(r):
        calls["n"] += 1
        return pop[int(r.integers(len(pop)))]

    out = make_offspring(pop, 10, cfg, rng, select)
    assert len(out) == 10
    assert calls["n"] == 10  # one parent per mutant


def test_make_offspring_crossover_only():
    rng = rng_stream(17)
    pop = [Individual(random_tree(2, 4, CFG, Activation.SIGMOID, rng)) for _ in range(4)]
    cfg = VariationConfig(crossover_prob=1.0, mutation_prob=0.0)
    calls = {"n": 0}

    def select(r):
        calls["n"] += 1
        return pop[int(r.integers(len(pop)))]

    out = make_offspring(pop, 10, cfg, rng, select)
    assert len(out) == 10
    assert calls["n"] == 10  # two parents per crossover pair


def test_make_offspring_exact_count_odd():
    rng = rng_stream(18)
    pop = [Individual(random_tree(2, 4, CFG, Activation.SIGMOID, rng)) for _ in range(4)]
    out = make_offspring(pop, 51, CFG, rng, lambda r: pop[int(r.integers(len(pop)))])
    assert len(out) == 51
    assert all(validate(t) == [] for t in out)
