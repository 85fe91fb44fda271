"""Saving and loading trained models.

A model file bundles the tree with everything needed to reproduce its
predictions on raw CSV rows: the fitted column encoders, the min-max
normalization parameters, and the class names.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .dataset import NormalizationParams
from .errors import DataError
from .tree import NeuralTree, from_json_dict, to_json_dict

MODEL_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class Model:
    tree: NeuralTree
    normalization: NormalizationParams
    encoders: tuple[tuple[str, ...] | None, ...]
    class_names: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "schema_version": MODEL_SCHEMA_VERSION,
            "tree": to_json_dict(self.tree),
            "normalization": {
                "col_min": [float(v) for v in self.normalization.col_min],
                "col_max": [float(v) for v in self.normalization.col_max],
            },
            "encoders": [list(e) if e is not None else None for e in self.encoders],
            "class_names": list(self.class_names),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Model":
        if d.get("schema_version") != MODEL_SCHEMA_VERSION:
            raise DataError(f"unsupported model schema version {d.get('schema_version')!r}")
        norm = d["normalization"]
        return cls(
            tree=from_json_dict(d["tree"]),
            normalization=NormalizationParams(
                np.array(norm["col_min"], dtype=np.float64),
                np.array(norm["col_max"], dtype=np.float64),
            ),
            encoders=tuple(tuple(e) if e is not None else None for e in d["encoders"]),
            class_names=tuple(d["class_names"]),
        )


def save_model(model: Model, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model.to_dict(), fh, sort_keys=True, indent=1)
        fh.write("\n")


def load_model(path: str) -> Model:
    try:
        with open(path, encoding="utf-8") as fh:
            return Model.from_dict(json.load(fh))
    except (OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
        raise DataError(f"cannot load model from {path}: {exc}") from exc
