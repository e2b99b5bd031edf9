"""Graph builders and straight-from-definition reference implementations.

The reference metrics loop over nodes and pairs explicitly and use exact
rational arithmetic wherever the inputs allow it, so they share no code path
with the vectorized library versions.
"""
from fractions import Fraction

import numpy as np
import pytest

from heterophily import filters, metrics
from heterophily.graph import make_graph


def triangle(labels=(0, 0, 1)):
    return make_graph([(0, 1), (1, 2), (0, 2)], np.eye(3)[:, :2], list(labels), n_classes=2)


def path3():
    return make_graph([(0, 1), (1, 2)], np.zeros((3, 1)), [0, 0, 1])


def star(k=4):
    return make_graph([(0, i) for i in range(1, k + 1)], np.zeros((k + 1, 1)), [0] + [1] * k)


def k33():
    """Complete bipartite K_{3,3}; each side is one class, features are the labels."""
    edges = [(i, j) for i in range(3) for j in range(3, 6)]
    y = [0, 0, 0, 1, 1, 1]
    return make_graph(edges, np.eye(2)[y], y)


def random_graph(rng, n, c=2, p=0.3, f=3, no_isolated=True, all_classes=True):
    """Erdos-Renyi graph; isolated nodes get one random neighbour when asked."""
    upper = np.triu(rng.random((n, n)) < p, 1)
    edges = [tuple(e) for e in np.argwhere(upper)]
    if no_isolated:
        deg = upper.sum(0) + upper.sum(1)
        for i in np.flatnonzero(deg == 0):
            j = int(rng.integers(0, n - 1))
            j += j >= i
            edges.append((int(i), j))
    y = rng.integers(0, c, n)
    if all_classes:
        y[:c] = np.arange(c)
        rng.shuffle(y)
    return make_graph(edges, rng.standard_normal((n, f)), y, n_classes=c)


# ------------------------------------------------------------ reference code


def neighbours(g):
    nb = [set() for _ in range(g.n_nodes)]
    for u, v in g.edges:
        nb[u].add(int(v))
        nb[v].add(int(u))
    return nb


def ref_edge_h(g):
    y = g.label_ids
    same = sum(1 for u, v in g.edges if y[u] == y[v])
    return Fraction(same, len(g.edges))


def ref_node_h(g):
    y = g.label_ids
    nb = neighbours(g)
    total = sum(Fraction(sum(1 for u in nb[v] if y[u] == y[v]), len(nb[v])) for v in range(g.n_nodes))
    return total / g.n_nodes


def ref_class_h(g):
    y = g.label_ids
    nb = neighbours(g)
    n, c = g.n_nodes, g.class_count
    out = Fraction(0)
    for k in range(c):
        members = [v for v in range(n) if y[v] == k]
        num = sum(sum(1 for u in nb[v] if y[u] == k) for v in members)
        den = sum(len(nb[v]) for v in members)
        hk = Fraction(num, den) if den else Fraction(0)
        out += max(hk - Fraction(len(members), n), Fraction(0))
    return out / (c - 1)


def ref_a_rw_renorm(g):
    """Exact rational renormalized random-walk matrix as nested lists."""
    nb = neighbours(g)
    n = g.n_nodes
    a = [[Fraction(0)] * n for _ in range(n)]
    for i in range(n):
        w = Fraction(1, len(nb[i]) + 1)
        for j in nb[i] | {i}:
            a[i][j] = w
    return a


def ref_matmul(a, b):
    return [[sum(a[i][k] * b[k][j] for k in range(len(b))) for j in range(len(b[0]))]
            for i in range(len(a))]


def ref_similarity(p):
    """S = P P^T from the rows of P (any number type)."""
    n = len(p)
    return [[sum(x * y for x, y in zip(p[v], p[u])) for u in range(n)] for v in range(n)]


def _means(s, y, v):
    same = [s[v][u] for u in range(len(y)) if y[u] == y[v]]
    other = [s[v][u] for u in range(len(y)) if y[u] != y[v]]
    return sum(same) / len(same), sum(other) / len(other)


def ref_s_agg(s, y):
    """Fraction of nodes whose same-class mean (including v) >= other-class mean."""
    hits = 0
    for v in range(len(y)):
        same, other = _means(s, y, v)
        hits += same >= other
    return Fraction(hits, len(y))


def ref_dd(s, y):
    hits = 0
    for v in range(len(y)):
        same, other = _means(s, y, v)
        hits += (same >= 0) and (other <= 0)
    return Fraction(hits, len(y))


def ref_label_similarity(g, highpass=False):
    """Exact S(A_rw_renorm, Z) or S(I - A_rw_renorm, Z)."""
    a = ref_a_rw_renorm(g)
    n = g.n_nodes
    if highpass:
        a = [[(1 if i == j else 0) - a[i][j] for j in range(n)] for i in range(n)]
    z = [[Fraction(int(x)) for x in row] for row in g.labels]
    return ref_similarity(ref_matmul(a, z))


def check_against_reference(g):
    """Optimized vs straight-from-definition metrics on one graph."""
    y = g.label_ids
    assert metrics.edge_homophily(g) == pytest.approx(float(ref_edge_h(g)), abs=1e-12)
    assert metrics.node_homophily(g) == pytest.approx(float(ref_node_h(g)), abs=1e-12)
    assert metrics.class_homophily(g) == pytest.approx(float(ref_class_h(g)), abs=1e-12)
    op = filters.affinity(g)
    z = g.label_matrix()
    # label signal: exact rationals
    assert metrics.aggregation_score(op, z, g.labels) == float(ref_s_agg(ref_label_similarity(g), y))
    assert (metrics.diversification_distinguishability(op, z, g.labels)
            == float(ref_dd(ref_label_similarity(g, highpass=True), y)))
    # feature signal: float reference
    p = (op.matrix @ g.features).tolist()
    assert metrics.aggregation_score(op, g.features, g.labels) == float(ref_s_agg(ref_similarity(p), y))
    hp = ((np.eye(g.n_nodes) - op.matrix) @ g.features).tolist()
    assert (metrics.diversification_distinguishability(op, g.features, g.labels)
            == float(ref_dd(ref_similarity(hp), y)))
    s = metrics.similarity_matrix(op, g.features)
    assert metrics.aggregation_similarity(s, g.labels) == float(ref_s_agg(ref_similarity(p), y))
