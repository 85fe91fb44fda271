"""Classification metrics and the two-sample t-test used for reporting."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy.stats import t as t_dist

from .tree import NeuralTree, class_scores


def error_rate(tree: NeuralTree, X: np.ndarray, y: np.ndarray) -> float:
    """Fraction of misclassified samples: mean of 1[predict(x_i) != y_i]."""
    if len(y) == 0:
        raise ValueError("error_rate: empty data")
    pred = np.argmax(class_scores(tree, X), axis=-1)
    return float(np.mean(pred != y))


def confusion(tree: NeuralTree, X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """r x r count matrix, rows = true class, cols = predicted class."""
    pred = np.argmax(class_scores(tree, X), axis=-1)
    r = tree.n_classes
    cm = np.zeros((r, r), dtype=np.int64)
    np.add.at(cm, (y, pred), 1)
    return cm


def confusion_json(cm: np.ndarray) -> str:
    """Serialize a confusion matrix with its row/column convention."""
    return json.dumps(
        {"rows": "true_class", "cols": "predicted_class",
         "counts": [[int(v) for v in row] for row in cm]},
        sort_keys=True,
    )


class RocPoint(NamedTuple):
    class_index: int
    fpr: float
    tpr: float


def roc_points(tree: NeuralTree, X: np.ndarray, y: np.ndarray) -> tuple[list[RocPoint], list[int]]:
    """One-vs-rest (FPR, TPR) of the hard argmax decision, per class.

    Classes absent from `y` cannot define a TPR; they are omitted and
    returned in the second element as a flag for the caller.
    """
    cm = confusion(tree, X, y)
    total = cm.sum()
    points, missing = [], []
    for k in range(tree.n_classes):
        tp = cm[k, k]
        fn = cm[k].sum() - tp
        fp = cm[:, k].sum() - tp
        tn = total - tp - fn - fp
        if tp + fn == 0:
            missing.append(k)
            continue
        fpr = fp / (fp + tn) if fp + tn > 0 else 0.0
        points.append(RocPoint(k, float(fpr), float(tp / (tp + fn))))
    return points, missing


class TTestResult(NamedTuple):
    statistic: float
    p_value: float
    degenerate: bool


def welch_ttest(a: Sequence[float], b: Sequence[float], pooled: bool = False) -> TTestResult:
    """Two-sided two-sample t-test, Welch's form by default.

    `pooled=True` switches to Student's equal-variance form. Two constant
    samples are degenerate: equal means give (t=0, p=1), different means
    are reported as (inf, 0) with the degenerate flag set.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    na, nb = len(a), len(b)
    if na < 2 or nb < 2:
        raise ValueError("welch_ttest: both samples need at least 2 values")
    ma, mb = a.mean(), b.mean()
    va, vb = a.var(ddof=1), b.var(ddof=1)

    if va == 0.0 and vb == 0.0:
        if ma == mb:
            return TTestResult(0.0, 1.0, False)
        return TTestResult(math.copysign(math.inf, ma - mb), 0.0, True)

    if pooled:
        sp2 = ((na - 1) * va + (nb - 1) * vb) / (na + nb - 2)
        stat = (ma - mb) / math.sqrt(sp2 * (1.0 / na + 1.0 / nb))
        df = na + nb - 2
    else:
        sa, sb = va / na, vb / nb
        stat = (ma - mb) / math.sqrt(sa + sb)
        df = (sa + sb) ** 2 / (sa**2 / (na - 1) + sb**2 / (nb - 1))
    p = 2.0 * float(t_dist.sf(abs(stat), df))
    return TTestResult(float(stat), p, False)


@dataclass(frozen=True)
class RunRecord:
    """One training run's outcome, the unit all report tables aggregate."""

    dataset: str
    optimizer: str
    activation: str
    seed: int
    best_tree_id: str
    train_f1: float
    test_f1: float
    tree_size: int
    wall_time: float
    hv_test: float

    CSV_HEADER = (
        "dataset,optimizer,activation,seed,best_tree_id,"
        "train_f1,test_f1,tree_size,wall_time,hv_test"
    )

    def csv_row(self) -> str:
        return (
            f"{self.dataset},{self.optimizer},{self.activation},{self.seed},"
            f"{self.best_tree_id},{self.train_f1!r},{self.test_f1!r},"
            f"{self.tree_size},{self.wall_time!r},{self.hv_test!r}"
        )

    @classmethod
    def from_dict(cls, d: dict) -> "RunRecord":
        return cls(
            dataset=str(d["dataset"]),
            optimizer=str(d["optimizer"]),
            activation=str(d["activation"]),
            seed=int(d["seed"]),
            best_tree_id=str(d["best_tree_id"]),
            train_f1=float(d["train_f1"]),
            test_f1=float(d["test_f1"]),
            tree_size=int(d["tree_size"]),
            wall_time=float(d["wall_time"]),
            hv_test=float(d["hv_test"]),
        )
