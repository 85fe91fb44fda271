"""Tabular classification data: CSV ingestion, encoding, scaling, splitting.

Categorical feature columns are integer-encoded by sorted distinct value,
labels are mapped to indices 0..r-1 by sorted distinct value, and features
are min-max scaled to [0, 1] using statistics from the training rows only.
Rows with missing or unparseable numeric cells are rejected, not imputed.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .rng import SPLIT_STREAM, rng_stream

# Cell values treated as missing; any row containing one is rejected.
MISSING_MARKERS = {"", "?", "NA", "N/A", "NaN", "nan"}


@dataclass(frozen=True)
class Dataset:
    """Encoded feature matrix with integer class labels.

    `encoders[j]` is the sorted tuple of distinct raw values for a
    categorical column j, or None for a numeric column; `class_names` holds
    the sorted raw label strings so index k decodes to `class_names[k]`.
    """

    name: str
    features: np.ndarray  # (N, d) float64
    labels: np.ndarray  # (N,) int64, values in [0, r)
    class_names: tuple[str, ...]
    encoders: tuple[tuple[str, ...] | None, ...]

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.class_names)


@dataclass(frozen=True)
class SplitSpec:
    """Holdout partition parameters; identical specs give identical splits."""

    train_fraction: float = 0.8
    seed: int = 0
    stratified: bool = True


@dataclass(frozen=True)
class ManifestEntry:
    features: int
    samples: int
    classes: int


# Expected shapes of the benchmark datasets, keyed by index name.
DATASET_MANIFEST: dict[str, ManifestEntry] = {
    "aus": ManifestEntry(14, 691, 2),
    "hrt": ManifestEntry(13, 270, 2),
    "ion": ManifestEntry(33, 351, 2),
    "pma": ManifestEntry(8, 768, 2),
    "wis": ManifestEntry(30, 569, 2),
    "irs": ManifestEntry(4, 150, 3),
    "win": ManifestEntry(13, 178, 3),
    "vhl": ManifestEntry(18, 846, 4),
    "gls": ManifestEntry(9, 214, 7),
}


def _is_float(cell: str) -> bool:
    try:
        float(cell)
        return True
    except ValueError:
        return False


def _read_rows(path: str) -> tuple[list[str] | None, list[list[str]]]:
    """Read raw CSV rows, sniffing an optional header row."""
    if not os.path.exists(path):
        raise DataError(f"no such file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if not rows:
        raise DataError(f"empty file: {path}")
    rows = [[cell.strip() for cell in row] for row in rows]
    # Header heuristic: first row is all-non-numeric while some later row
    # has a numeric cell in the same position.
    header = None
    if len(rows) > 1 and all(not _is_float(c) for c in rows[0]):
        if any(_is_float(c) for c in rows[1]):
            header = rows[0]
            rows = rows[1:]
    return header, rows


def _resolve_label_col(label_col: int | str, header: list[str] | None, width: int) -> int:
    if isinstance(label_col, str) and not label_col.lstrip("-").isdigit():
        if header is None:
            raise DataError(f"label column {label_col!r} named but file has no header")
        try:
            return header.index(label_col)
        except ValueError:
            raise DataError(f"label column {label_col!r} not in header {header}") from None
    idx = int(label_col)
    if idx < 0:
        idx += width
    if not 0 <= idx < width:
        raise DataError(f"label column {label_col} outside 0..{width - 1}")
    return idx


def encode_column(values: list[str]) -> tuple[np.ndarray, tuple[str, ...] | None]:
    """Encode one feature column: numeric passthrough or sorted-distinct codes."""
    if all(_is_float(v) for v in values):
        return np.array([float(v) for v in values]), None
    codes = tuple(sorted(set(values)))
    lookup = {v: i for i, v in enumerate(codes)}
    return np.array([float(lookup[v]) for v in values]), codes


def load_csv(path: str, label_col: int | str = -1, name: str | None = None) -> Dataset:
    """Load a CSV file into an encoded Dataset.

    Exactly one column (by index or header name) is the label; all others
    are features. Row order is preserved.
    """
    header, rows = _read_rows(path)
    width = len(rows[0])
    for i, row in enumerate(rows):
        if len(row) != width:
            raise DataError(f"{path}: row {i} has {len(row)} columns, expected {width}")
        for cell in row:
            if cell in MISSING_MARKERS:
                raise DataError(f"{path}: row {i} has a missing value")
    if width < 2:
        raise DataError(f"{path}: need at least one feature column and one label column")

    lcol = _resolve_label_col(label_col, header, width)
    raw_labels = [row[lcol] for row in rows]
    class_names = tuple(sorted(set(raw_labels)))
    if len(class_names) < 2:
        raise DataError(f"{path}: fewer than two classes in label column")
    label_lookup = {v: i for i, v in enumerate(class_names)}
    labels = np.array([label_lookup[v] for v in raw_labels], dtype=np.int64)

    columns = []
    encoders = []
    for j in range(width):
        if j == lcol:
            continue
        col, codes = encode_column([row[j] for row in rows])
        columns.append(col)
        encoders.append(codes)

    features = np.column_stack(columns).astype(np.float64)
    if name is None:
        name = os.path.splitext(os.path.basename(path))[0]
    return Dataset(name, features, labels, class_names, tuple(encoders))


def encode_features(rows: list[list[str]], encoders: tuple[tuple[str, ...] | None, ...]) -> np.ndarray:
    """Encode raw feature rows with a previously fitted column encoding."""
    if any(len(row) != len(encoders) for row in rows):
        raise DataError(f"expected {len(encoders)} feature columns")
    out = np.empty((len(rows), len(encoders)), dtype=np.float64)
    for j, codes in enumerate(encoders):
        if codes is None:
            for i, row in enumerate(rows):
                if not _is_float(row[j]):
                    raise DataError(f"row {i}: non-numeric value {row[j]!r} in numeric column {j}")
                out[i, j] = float(row[j])
        else:
            lookup = {v: k for k, v in enumerate(codes)}
            for i, row in enumerate(rows):
                if row[j] not in lookup:
                    raise DataError(f"row {i}: unseen category {row[j]!r} in column {j}")
                out[i, j] = lookup[row[j]]
    return out


@dataclass(frozen=True)
class NormalizationParams:
    """Per-column affine map fitted on the training rows."""

    col_min: np.ndarray
    col_max: np.ndarray

    def transform(self, X: np.ndarray) -> np.ndarray:
        span = self.col_max - self.col_min
        out = np.empty_like(X, dtype=np.float64)
        for j in range(X.shape[1]):
            if span[j] == 0.0:
                out[:, j] = 0.5  # constant column carries no information
            else:
                out[:, j] = (X[:, j] - self.col_min[j]) / span[j]
        return out


def normalize(dataset: Dataset, train_idx: np.ndarray) -> tuple[Dataset, NormalizationParams]:
    """Min-max scale all rows using min/max computed on `train_idx` only.

    Training values land in [0, 1]; test values may fall outside. Constant
    training columns map to 0.5 everywhere.
    """
    train_idx = np.asarray(train_idx)
    if train_idx.size == 0:
        raise DataError("normalize: empty training index set")
    train = dataset.features[train_idx]
    params = NormalizationParams(train.min(axis=0), train.max(axis=0))
    scaled = params.transform(dataset.features)
    return (
        Dataset(dataset.name, scaled, dataset.labels, dataset.class_names, dataset.encoders),
        params,
    )


def split(dataset: Dataset, spec: SplitSpec) -> tuple[np.ndarray, np.ndarray]:
    """Partition [0, N) into (train, test) index arrays.

    Deterministic under a fixed seed. Stratified splits draw
    round(train_fraction * class count) per class (clamped so both sides
    keep at least one sample of the class).
    """
    if not 0.0 < spec.train_fraction < 1.0:
        raise DataError(f"train_fraction {spec.train_fraction} outside (0, 1)")
    rng = rng_stream(spec.seed, SPLIT_STREAM)
    n = dataset.n_samples
    if not spec.stratified:
        perm = rng.permutation(n)
        n_train = int(round(spec.train_fraction * n))
        n_train = min(max(n_train, 1), n - 1)
        return np.sort(perm[:n_train]), np.sort(perm[n_train:])

    train_parts, test_parts = [], []
    for k in range(dataset.n_classes):
        members = np.flatnonzero(dataset.labels == k)
        if members.size < 2:
            raise DataError(
                f"class {dataset.class_names[k]!r} has {members.size} sample(s); "
                "stratified split needs at least 2"
            )
        perm = members[rng.permutation(members.size)]
        n_train = int(round(spec.train_fraction * members.size))
        n_train = min(max(n_train, 1), members.size - 1)
        train_parts.append(perm[:n_train])
        test_parts.append(perm[n_train:])
    return np.sort(np.concatenate(train_parts)), np.sort(np.concatenate(test_parts))


def check_manifest(dataset: Dataset, strict: bool = False) -> list[str]:
    """Compare a dataset against the built-in manifest by its index name.

    Returns human-readable mismatches; raises DataError instead when strict.
    """
    problems = []
    entry = DATASET_MANIFEST.get(dataset.name)
    if entry is None:
        if strict:
            raise DataError(f"dataset {dataset.name!r} not in manifest")
        return problems
    got = (dataset.n_features, dataset.n_samples, dataset.n_classes)
    want = (entry.features, entry.samples, entry.classes)
    if got != want:
        problems.append(
            f"{dataset.name}: (features, samples, classes) = {got}, manifest says {want}"
        )
    if strict and problems:
        raise DataError("; ".join(problems))
    return problems
