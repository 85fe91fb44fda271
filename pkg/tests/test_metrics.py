import math

import numpy as np
import pytest
from scipy import integrate
from scipy.stats import ttest_ind
from util import internal, minimal_tree

from mont.metrics import confusion, confusion_json, error_rate, roc_points, welch_ttest
from mont.rng import rng_stream
from mont.tree import Activation, Leaf, NeuralTree, class_scores
from mont.variation import VariationConfig, random_tree


def constant_class_tree(winner, r, d):
    """Tree that always predicts `winner` (its subtree saturates high)."""
    subs = []
    for k in range(r):
        bias = 10.0 if k == winner else -10.0
        subs.append(internal([Leaf(0), Leaf(1 % d)], bias=bias))
    return NeuralTree(tuple(subs), d, 5, 10)


def test_error_rate_all_correct_and_all_wrong():
    X = np.array([[0.2, 0.4]] * 10)
    t = constant_class_tree(1, 2, 2)
    assert error_rate(t, X, np.ones(10, dtype=int)) == 0.0
    assert error_rate(t, X, np.zeros(10, dtype=int)) == 1.0


def test_error_rate_three_of_ten_wrong():
    X = np.array([[0.1, 0.9]] * 10)
    t = constant_class_tree(0, 2, 2)
    y = np.array([0] * 7 + [1] * 3)
    assert error_rate(t, X, y) == pytest.approx(0.3)


def test_confusion_diagonal_for_perfect_and_column_for_constant():
    X = np.array([[0.3, 0.3]] * 9)
    y = np.array([0, 1, 2] * 3)
    t = constant_class_tree(0, 3, 2)
    cm = confusion(t, X, y)
    assert cm[:, 0].tolist() == [3, 3, 3]
    assert cm[:, 1:].sum() == 0
    # row sums equal per-class sample counts
    assert cm.sum(axis=1).tolist() == [3, 3, 3]


def test_error_rate_equals_one_minus_confusion_trace():
    rng = rng_stream(21)
    for _ in range(25):
        t = random_tree(3, 4, VariationConfig(), Activation.SIGMOID, rng)
        X = rng.random((40, 4))
        y = rng.integers(3, size=40)
        cm = confusion(t, X, y)
        assert error_rate(t, X, y) == (40 - np.trace(cm)) / 40


def test_confusion_json_round_trip():
    import json

    X = np.array([[0.3, 0.3]] * 6)
    y = np.array([0, 1, 2] * 2)
    cm = confusion(constant_class_tree(1, 3, 2), X, y)
    decoded = json.loads(confusion_json(cm))
    assert decoded["counts"] == cm.tolist()
    assert decoded["rows"] == "true_class"


def test_roc_perfect_classifier():
    X = np.array([[0.2, 0.2], [0.8, 0.8]] * 5)
    sub0 = internal([Leaf(0), Leaf(1)], weights=(-8.0, -8.0), bias=4.0)
    sub1 = internal([Leaf(0), Leaf(1)], weights=(8.0, 8.0), bias=-4.0)
    t = NeuralTree((sub0, sub1), 2, 5, 10)
    y = np.array([0, 1] * 5)
    points, missing = roc_points(t, X, y)
    assert missing == []
    assert [(p.fpr, p.tpr) for p in points] == [(0.0, 1.0), (0.0, 1.0)]


def test_roc_constant_predictor_binary():
    X = np.array([[0.5, 0.5]] * 10)
    y = np.array([0] * 5 + [1] * 5)
    t = constant_class_tree(0, 2, 2)
    points, _ = roc_points(t, X, y)
    assert points[0] == (0, 1.0, 1.0)  # class 0 point at (1,1)
    assert points[1] == (1, 0.0, 0.0)


def test_roc_absent_class_flagged():
    X = np.array([[0.5, 0.5]] * 4)
    y = np.array([0, 0, 1, 1])
    t = constant_class_tree(0, 3, 2)
    points, missing = roc_points(t, X, y)
    assert missing == [2]
    assert {p.class_index for p in points} == {0, 1}


def test_roc_points_within_unit_square():
    rng = rng_stream(22)
    for _ in range(20):
        t = random_tree(3, 3, VariationConfig(), Activation.TANH, rng)
        X = rng.random((30, 3))
        y = rng.integers(3, size=30)
        points, _ = roc_points(t, X, y)
        for p in points:
            assert 0.0 <= p.fpr <= 1.0 and 0.0 <= p.tpr <= 1.0


def oracle_welch(a, b):
    """Brute-force formula evaluation with a quadrature p-value."""
    na, nb = len(a), len(b)
    ma, mb = sum(a) / na, sum(b) / nb
    va = sum((v - ma) ** 2 for v in a) / (na - 1)
    vb = sum((v - mb) ** 2 for v in b) / (nb - 1)
    sa, sb = va / na, vb / nb
    t = (ma - mb) / math.sqrt(sa + sb)
    df = (sa + sb) ** 2 / (sa**2 / (na - 1) + sb**2 / (nb - 1))

    def pdf(x):
        c = math.gamma((df + 1) / 2) / (math.sqrt(df * math.pi) * math.gamma(df / 2))
        return c * (1 + x * x / df) ** (-(df + 1) / 2)

    tail, _ = integrate.quad(pdf, abs(t), math.inf)
    return t, 2.0 * tail


def test_welch_identical_samples():
    a = [0.1, 0.2, 0.3, 0.4]
    result = welch_ttest(a, list(a))
    assert result.statistic == 0.0 and result.p_value == 1.0


def test_welch_constant_equal_and_different():
    zeros, ones = [0.0] * 30, [1.0] * 30
    equal = welch_ttest(zeros, list(zeros))
    assert (equal.statistic, equal.p_value, equal.degenerate) == (0.0, 1.0, False)
    diff = welch_ttest(zeros, ones)
    assert diff.degenerate and diff.p_value == 0.0 and math.isinf(diff.statistic)


def test_welch_matches_independent_oracle():
    rng = rng_stream(23)
    a = list(rng.normal(0.15, 0.05, size=30))
    b = list(rng.normal(0.19, 0.08, size=30))
    got = welch_ttest(a, b)
    t_ref, p_ref = oracle_welch(a, b)
    assert got.statistic == pytest.approx(t_ref, abs=1e-9)
    assert got.p_value == pytest.approx(p_ref, abs=1e-9)
    # cross-check against scipy's independent implementation
    sp = ttest_ind(a, b, equal_var=False)
    assert got.statistic == pytest.approx(sp.statistic, abs=1e-9)
    assert got.p_value == pytest.approx(sp.pvalue, abs=1e-9)


def test_welch_symmetry():
    rng = rng_stream(24)
    a = list(rng.random(12))
    b = list(rng.random(15))
    ab = welch_ttest(a, b)
    ba = welch_ttest(b, a)
    assert ab.statistic == pytest.approx(-ba.statistic)
    assert ab.p_value == pytest.approx(ba.p_value)


def test_pooled_variant_matches_scipy():
    rng = rng_stream(25)
    a = list(rng.random(10))
    b = list(rng.random(14))
    got = welch_ttest(a, b, pooled=True)
    sp = ttest_ind(a, b, equal_var=True)
    assert got.statistic == pytest.approx(sp.statistic, abs=1e-9)
    assert got.p_value == pytest.approx(sp.pvalue, abs=1e-9)


def test_welch_requires_two_values():
    with pytest.raises(ValueError):
        welch_ttest([1.0], [1.0, 2.0])
