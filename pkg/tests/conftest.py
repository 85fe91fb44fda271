import csv
import os

import numpy as np
import pytest
from sklearn.datasets import load_breast_cancer, load_iris, load_wine

from mont.dataset import Dataset


def _write_csv(path, X, y, class_names):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        for row, label in zip(X, y):
            writer.writerow([repr(float(v)) for v in row] + [class_names[label]])


@pytest.fixture(scope="session")
def data_dir(tmp_path_factory):
    """CSV copies of the benchmark datasets used by the desk-scale tests."""
    root = tmp_path_factory.mktemp("data")
    iris = load_iris()
    _write_csv(root / "iris.csv", iris.data, iris.target,
               ["setosa", "versicolor", "virginica"])
    wine = load_wine()
    _write_csv(root / "wine.csv", wine.data, wine.target, ["c1", "c2", "c3"])
    wis = load_breast_cancer()
    _write_csv(root / "wdbc.csv", wis.data, wis.target, ["malignant", "benign"])
    return root


@pytest.fixture(scope="session")
def iris_dataset():
    iris = load_iris()
    return Dataset(
        "irs",
        iris.data.astype(np.float64),
        iris.target.astype(np.int64),
        ("setosa", "versicolor", "virginica"),
        (None,) * 4,
    )


@pytest.fixture(scope="session")
def toy_dataset():
    """20 samples, 2 features, 2 well-separated classes."""
    rng = np.random.default_rng(99)
    a = rng.normal(0.25, 0.08, size=(10, 2))
    b = rng.normal(0.75, 0.08, size=(10, 2))
    X = np.clip(np.vstack([a, b]), 0.0, 1.0)
    y = np.array([0] * 10 + [1] * 10, dtype=np.int64)
    return X, y


def pytest_addoption(parser):
    parser.addoption(
        "--workers", type=int, default=min(2, os.cpu_count() or 1),
        help="worker processes for the desk-scale acceptance grid",
    )
