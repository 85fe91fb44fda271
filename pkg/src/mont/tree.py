"""Multi-output neural tree: structure, evaluation, and accounting.

A tree is an m-ary rooted classifier genome. The root is purely structural
and holds one internal ("neural") node per class; every internal node
computes an activation over the weighted sum of its children plus a bias,
and every leaf passes one input feature through. The score of class k is
the output of the k-th root child, and prediction is the argmax.

Trees are immutable: all variation happens by building new trees, so
subtrees may be shared freely and evaluation is safe under concurrency.
"""

from __future__ import annotations

import enum
import hashlib
import json
from dataclasses import dataclass
from typing import Iterator, Union

import numpy as np
from scipy.special import expit

TREE_SCHEMA_VERSION = 1


class Activation(enum.Enum):
    """Squashing function applied at every internal node of a tree."""

    GAUSSIAN = "gaussian"
    SIGMOID = "sigmoid"
    TANH = "tanh"

    def apply(self, y):
        """Apply the activation elementwise (scalars or arrays)."""
        if self is Activation.GAUSSIAN:
            return np.exp(-np.square(y))
        if self is Activation.SIGMOID:
            return expit(y)
        return np.tanh(y)

    @classmethod
    def parse(cls, text: str) -> "Activation":
        try:
            return cls(text.strip().lower())
        except ValueError:
            raise ValueError(
                f"unknown activation {text!r}; expected one of "
                f"{[a.value for a in cls]}"
            ) from None


@dataclass(frozen=True)
class Leaf:
    """Terminal node passing through one input feature."""

    feature: int


@dataclass(frozen=True)
class Internal:
    """Neural node: activation(bias + sum(weight_i * child_i))."""

    children: tuple["Node", ...]
    weights: tuple[float, ...]
    bias: float
    activation: Activation


Node = Union[Leaf, Internal]


@dataclass(frozen=True)
class NeuralTree:
    """A classifier tree with one internal subtree per class.

    The structural root carries no weights or activation; it only fans out
    to the class subtrees. `m_max` and `p_max` are the arity and height
    bounds the tree was built under (root depth 0, height = max leaf depth).
    """

    class_subtrees: tuple[Internal, ...]
    n_features: int
    m_max: int
    p_max: int

    @property
    def n_classes(self) -> int:
        return len(self.class_subtrees)


def evaluate_node(node: Node, x: np.ndarray):
    """Evaluate a node bottom-up in depth-first pre-order, O(size) work.

    `x` is either one sample of shape (d,) giving a scalar, or a batch of
    shape (N, d) giving a length-N vector; the arithmetic is identical.
    """
    if isinstance(node, Leaf):
        return x[..., node.feature]
    acc = node.bias
    for w, child in zip(node.weights, node.children):
        acc = acc + w * evaluate_node(child, x)
    return node.activation.apply(acc)


def class_scores(tree: NeuralTree, x: np.ndarray) -> np.ndarray:
    """Score every class: element k is the output of root child k.

    The root itself performs no arithmetic. Shape (r,) for a single sample,
    (N, r) for a batch.
    """
    return np.stack(
        [np.asarray(evaluate_node(sub, x)) for sub in tree.class_subtrees], axis=-1
    )


def predict(tree: NeuralTree, x: np.ndarray) -> np.ndarray:
    """Argmax class decision; ties break toward the lowest class index."""
    return np.argmax(class_scores(tree, x), axis=-1)


def node_size(node: Node) -> int:
    if isinstance(node, Leaf):
        return 1
    return 1 + sum(node_size(c) for c in node.children)


def tree_size(tree: NeuralTree) -> int:
    """Total node count, structural root included."""
    return 1 + sum(node_size(sub) for sub in tree.class_subtrees)


def node_height(node: Node) -> int:
    if isinstance(node, Leaf):
        return 0
    return 1 + max(node_height(c) for c in node.children)


def tree_height(tree: NeuralTree) -> int:
    """Maximum leaf depth, with the root at depth 0."""
    return 1 + max(node_height(sub) for sub in tree.class_subtrees)


def iter_paths(tree: NeuralTree) -> Iterator[tuple[tuple[int, ...], Node]]:
    """Yield (path, node) for every non-root node in pre-order.

    A path is the tuple of child indices from the root; class subtree k has
    path (k,).
    """

    def walk(path: tuple[int, ...], node: Node):
        yield path, node
        if isinstance(node, Internal):
            for i, child in enumerate(node.children):
                yield from walk(path + (i,), child)

    for k, sub in enumerate(tree.class_subtrees):
        yield from walk((k,), sub)


def subtree_at(tree: NeuralTree, path: tuple[int, ...]) -> Node:
    if not path:
        raise ValueError("empty path addresses the structural root")
    node: Node = tree.class_subtrees[path[0]]
    for i in path[1:]:
        node = node.children[i]
    return node


def replace_at(tree: NeuralTree, path: tuple[int, ...], new: Node) -> NeuralTree:
    """Return a new tree with the node at `path` replaced by `new`.

    Only the spine from the root to the path is rebuilt; untouched subtrees
    are shared with the original (safe, trees are immutable).
    """
    if not path:
        raise ValueError("cannot replace the structural root")

    def rebuild(node: Node, rest: tuple[int, ...]) -> Node:
        if not rest:
            return new
        assert isinstance(node, Internal)
        i = rest[0]
        children = list(node.children)
        children[i] = rebuild(children[i], rest[1:])
        return Internal(tuple(children), node.weights, node.bias, node.activation)

    subs = list(tree.class_subtrees)
    subs[path[0]] = rebuild(subs[path[0]], path[1:])
    return NeuralTree(tuple(subs), tree.n_features, tree.m_max, tree.p_max)


def validate(tree: NeuralTree) -> list[str]:
    """Check all structural invariants; returns violations, never raises."""
    violations = []
    if tree.n_classes < 2:
        violations.append(f"root arity: {tree.n_classes} classes, need at least 2")
    for k, sub in enumerate(tree.class_subtrees):
        if not isinstance(sub, Internal):
            violations.append(f"root child {k} is not an internal node")

    def walk(node: Node, depth: int, where: str):
        if isinstance(node, Leaf):
            if not 0 <= node.feature < tree.n_features:
                violations.append(
                    f"{where}: leaf feature {node.feature} outside [0, {tree.n_features})"
                )
            if depth > tree.p_max:
                violations.append(f"{where}: leaf depth {depth} exceeds p_max {tree.p_max}")
            return
        if not 2 <= len(node.children) <= tree.m_max:
            violations.append(
                f"{where}: arity {len(node.children)} outside [2, {tree.m_max}]"
            )
        if len(node.weights) != len(node.children):
            violations.append(
                f"{where}: {len(node.weights)} weights for {len(node.children)} children"
            )
        for i, child in enumerate(node.children):
            walk(child, depth + 1, f"{where}.{i}")

    for k, sub in enumerate(tree.class_subtrees):
        if isinstance(sub, Internal):
            walk(sub, 1, f"class{k}")
    return violations


def to_dot(tree: NeuralTree) -> str:
    """Deterministic DOT digraph of the tree.

    Internal nodes are labeled v<k> with their activation (pre-order
    numbering, root is v0), leaves are labeled x<i> by feature index, and
    edges carry their weight rounded to 3 decimals. Root edges are labeled
    with the class they feed.
    """
    lines = ["digraph neural_tree {", '  n0 [label="v0" shape=circle];']
    edges = []
    counter = {"id": 0, "v": 0}

    def emit(node: Node, parent_id: str, edge_label: str) -> None:
        counter["id"] += 1
        nid = f"n{counter['id']}"
        if isinstance(node, Leaf):
            lines.append(f'  {nid} [label="x{node.feature}" shape=box];')
            edges.append(f'  {parent_id} -> {nid} [label="{edge_label}"];')
            return
        counter["v"] += 1
        lines.append(
            f'  {nid} [label="v{counter["v"]} {node.activation.value}" shape=circle];'
        )
        edges.append(f'  {parent_id} -> {nid} [label="{edge_label}"];')
        for w, child in zip(node.weights, node.children):
            emit(child, nid, f"{w:.3f}")

    for k, sub in enumerate(tree.class_subtrees):
        emit(sub, "n0", f"c{k}")
    return "\n".join(lines + edges + ["}"]) + "\n"


def _node_to_dict(node: Node) -> dict:
    if isinstance(node, Leaf):
        return {"kind": "leaf", "feature": node.feature}
    return {
        "kind": "internal",
        "activation": node.activation.value,
        "bias": node.bias,
        "weights": list(node.weights),
        "children": [_node_to_dict(c) for c in node.children],
    }


def _node_from_dict(d: dict) -> Node:
    if d["kind"] == "leaf":
        return Leaf(int(d["feature"]))
    if d["kind"] != "internal":
        raise ValueError(f"unknown node kind {d.get('kind')!r}")
    return Internal(
        children=tuple(_node_from_dict(c) for c in d["children"]),
        weights=tuple(float(w) for w in d["weights"]),
        bias=float(d["bias"]),
        activation=Activation(d["activation"]),
    )


def to_json_dict(tree: NeuralTree) -> dict:
    return {
        "schema_version": TREE_SCHEMA_VERSION,
        "n_features": tree.n_features,
        "m_max": tree.m_max,
        "p_max": tree.p_max,
        "class_subtrees": [_node_to_dict(sub) for sub in tree.class_subtrees],
    }


def from_json_dict(d: dict) -> NeuralTree:
    version = d.get("schema_version")
    if version != TREE_SCHEMA_VERSION:
        raise ValueError(f"unsupported tree schema version {version!r}")
    subs = tuple(_node_from_dict(s) for s in d["class_subtrees"])
    for sub in subs:
        if not isinstance(sub, Internal):
            raise ValueError("class subtree root must be an internal node")
    return NeuralTree(subs, int(d["n_features"]), int(d["m_max"]), int(d["p_max"]))


def to_json(tree: NeuralTree) -> str:
    return json.dumps(to_json_dict(tree), sort_keys=True)


def from_json(text: str) -> NeuralTree:
    return from_json_dict(json.loads(text))


def tree_id(tree: NeuralTree) -> str:
    """Short content hash of the serialized tree; stable across runs."""
    return hashlib.sha256(to_json(tree).encode()).hexdigest()[:12]
