"""

Shared builders for hand-constructed trees used across test modules."""

from mont.tree import Activation, Internal, Leaf, NeuralTree


def internal(children, weights=None, bias=0.0, activation=Activation.SIGMOID):
    if weights is None:
        weights = (0.0,) * len(children)
    return Internal(tuple(children), tuple(float(w) for w in weights), bias, activation)


def minimal_tree(r=2, d=4, activation=Activation.SIGMOID, m_max=5, p_max=10):
    """Smallest legal tree: root, r class nodes, 2 leaves each."""
    subs = tuple(
        internal([Leaf(0), Leaf(1 % d)], activation=activation) for _ in range(r)
    )
    return NeuralTree(subs, d, m_max, p_max)


def full_mary_tree(m, depth, d=4, activation=Activation.SIGMOID):
    """Root with m class subtrees, every internal node with m children,
    leaves exactly at `depth`."""

    def grow(level):
        if level == depth:
            return Leaf(0)
        return internal([grow(level + 1) for _ in range(m)], activation=activation)

    subs = tuple(grow(1) for _ in range(m))
    return NeuralTree(subs, d, max(m, 2), max(depth, 2))
