"""Homophily metrics, post-aggregation similarity, and diversification distinguishability.

Conventions shared by every similarity-based score:

* the same-class set of node ``v`` includes ``v`` itself;
* comparisons are weak (``>=`` / ``<=``), and values within
  ``TIE_RTOL * max|S|`` of each other are treated as ties, so that
  round-off cannot flip an exact mathematical tie.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, fields

import numpy as np

from . import filters
from .errors import DegenerateClassError, IsolatedNodeError, ValidationError
from .graph import Graph, degrees, induced_subgraph

TIE_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class SimMatrix:
    """``S = (op @ signal) (op @ signal)^T``."""

    matrix: np.ndarray
    operator_kind: str
    signal_tag: str

    def __post_init__(self):
        self.matrix.setflags(write=False)


@dataclass(frozen=True)
class HomophilyReport:
    h_edge: float
    h_node: float
    h_class: float
    h_agg: float
    h_agg_mod: float
    s_agg_AX: float
    s_agg_IX: float
    dd: float

    def as_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]


# ------------------------------------------------------------ classic metrics


def _label_ids(z) -> np.ndarray:
    z = np.asarray(z)
    return np.argmax(z, axis=1) if z.ndim == 2 else z.astype(np.int64)


def edge_homophily(g: Graph) -> float:
    """Fraction of edges whose endpoints share a label."""
    if g.n_edges == 0:
        raise ValidationError("edge homophily needs at least one edge")
    y = g.label_ids
    return float(np.count_nonzero(y[g.edges[:, 0]] == y[g.edges[:, 1]]) / g.n_edges)


def _same_label_neighbors(g: Graph) -> np.ndarray:
    y = g.label_ids
    same = y[g.edges[:, 0]] == y[g.edges[:, 1]]
    ends = g.edges[same].ravel()
    return np.bincount(ends, minlength=g.n_nodes)


def node_homophily(g: Graph, *, allow_isolated=False) -> float:
    """Mean over nodes of the fraction of same-label neighbors.

    With ``allow_isolated=True`` degree-0 nodes are left out of the mean
    instead of raising (used by label-subset estimation).
    """
    d = degrees(g)
    iso = np.flatnonzero(d == 0)
    if iso.size and not allow_isolated:
        raise IsolatedNodeError(iso, what="node homophily")
    keep = d > 0
    if not keep.any():
        raise ValidationError("node homophily needs at least one non-isolated node")
    same = _same_label_neighbors(g)
    return float(np.mean(same[keep] / d[keep]))


def class_homophily(g: Graph, *, allow_isolated=False) -> float:
    """Class-insensitive homophily: ``1/(C-1) sum_k [h_k - |class k|/N]_+``."""
    c = g.class_count
    if c < 2:
        raise ValidationError(f"class homophily needs C >= 2, got C={c}")
    d = degrees(g)
    iso = np.flatnonzero(d == 0)
    if iso.size and not allow_isolated:
        raise IsolatedNodeError(iso, what="class homophily")
    y = g.label_ids
    same = _same_label_neighbors(g)
    num = np.bincount(y, weights=same, minlength=c)
    den = np.bincount(y, weights=d, minlength=c)
    share = np.bincount(y, minlength=c) / g.n_nodes
    total = 0.0
    for k in range(c):
        if den[k] > 0:
            total += max(num[k] / den[k] - share[k], 0.0)
    return float(total / (c - 1))


# ------------------------------------------------------- similarity matrices


def similarity_matrix(op: filters.Operator, signal, signal_tag="X") -> SimMatrix:
    p = filters.apply(op, signal)
    return SimMatrix(p @ p.T, op.kind, signal_tag)


def _check_classes(y: np.ndarray):
    if y.size < 2:
        raise DegenerateClassError("similarity scores need at least 2 nodes")
    if np.unique(y).size < 2:
        raise DegenerateClassError(
            "every node needs at least one other-class node, but only one class is present"
        )


def _class_means(y, c, *, s=None, p=None):
    """Per-node same-class and other-class mean of ``S[v, :]``.

    Either the full matrix ``s`` or a factor ``p`` with ``S = p p^T``; the
    factored path never materializes ``N x N``.
    """
    z = np.zeros((y.size, c))
    z[np.arange(y.size), y] = 1.0
    if s is not None:
        by_class = s @ z
        row_total = s.sum(axis=1)
        scale = float(np.abs(s).max()) if s.size else 0.0
    else:
        by_class = p @ (p.T @ z)
        row_total = p @ p.sum(axis=0)
        scale = float((p * p).sum(axis=1).max()) if p.size else 0.0
    counts = z.sum(axis=0)
    rows = np.arange(y.size)
    same_n = counts[y]
    same = by_class[rows, y] / same_n
    other = (row_total - by_class[rows, y]) / (y.size - same_n)
    return same, other, TIE_RTOL * scale


def _s_agg(y, c, **kw) -> float:
    _check_classes(y)
    same, other, tol = _class_means(y, c, **kw)
    return float(np.count_nonzero(same >= other - tol) / y.size)


def _dd(y, c, **kw) -> float:
    _check_classes(y)
    same, other, tol = _class_means(y, c, **kw)
    ok = (same >= -tol) & (other <= tol)
    return float(np.count_nonzero(ok) / y.size)


def _ids_and_count(labels):
    z = np.asarray(labels)
    y = _label_ids(z)
    c = z.shape[1] if z.ndim == 2 else int(y.max()) + 1
    return y, c


def aggregation_similarity(s: SimMatrix, labels) -> float:
    """Fraction of nodes whose same-class mean similarity is >= the other-class mean."""
    y, c = _ids_and_count(labels)
    m = s.matrix if isinstance(s, SimMatrix) else np.asarray(s)
    if m.shape != (y.size, y.size):
        raise ValidationError(f"dimension mismatch: S is {m.shape}, labels have {y.size} rows")
    return _s_agg(y, c, s=m)


def modified(score: float) -> float:
    """``[2 s - 1]_+``"""
    return max(2.0 * score - 1.0, 0.0)


def modified_aggregation_similarity(s: SimMatrix, labels) -> float:
    return modified(aggregation_similarity(s, labels))


def aggregation_score(op: filters.Operator, signal, labels) -> float:
    """``S_agg(S(op, signal))`` without forming the N x N matrix."""
    y, c = _ids_and_count(labels)
    return _s_agg(y, c, p=filters.apply(op, signal))


def aggregation_homophily(g: Graph, op_kind=filters.DEFAULT_KIND) -> tuple[float, float]:
    """``(H_agg, H_agg^M)``, the label-only similarity scores under ``op_kind``."""
    op = filters.operator(g, op_kind)
    h = aggregation_score(op, g.label_matrix(), g.labels)
    return h, modified(h)


def diversification_distinguishability(op: filters.Operator, signal, labels) -> float:
    """Fraction of nodes that the high-pass ``I - op`` separates.

    ``op`` is the aggregation (low-pass) operator; the high-pass complement is
    formed here. A node counts when its same-class mean of ``S(I - op, X)`` is
    ``>= 0`` and its other-class mean is ``<= 0``.
    """
    if not op.is_lowpass:
        raise ValidationError(f"DD needs an affinity operator, got {op.kind!r}")
    hp = filters.highpass(op)
    y, c = _ids_and_count(labels)
    return _dd(y, c, p=filters.apply(hp, signal))


# ------------------------------------------------------------------ reports


def homophily_report(g: Graph, op_kind=filters.DEFAULT_KIND) -> HomophilyReport:
    op = filters.operator(g, op_kind)
    x = g.features
    h_agg = aggregation_score(op, g.label_matrix(), g.labels)
    return HomophilyReport(
        h_edge=edge_homophily(g),
        h_node=node_homophily(g),
        h_class=class_homophily(g),
        h_agg=h_agg,
        h_agg_mod=modified(h_agg),
        s_agg_AX=aggregation_score(op, x, g.labels),
        s_agg_IX=aggregation_score(filters.identity(g.n_nodes), x, g.labels),
        dd=diversification_distinguishability(op, x, g.labels),
    )


def estimate_metrics(g: Graph, train_mask, op_kind=filters.DEFAULT_KIND) -> HomophilyReport:
    """Every report field using only the labels of ``train_mask`` nodes.

    Label-structure metrics (edge/node/class/aggregation homophily) are
    computed on the subgraph induced by the mask. Feature-based scores use the
    full-graph operator and features (both label-free) and restrict the
    similarity matrix to masked rows and columns.
    """
    mask = np.asarray(train_mask)
    nodes = np.flatnonzero(mask) if mask.dtype == bool else np.sort(mask.astype(np.int64))
    if nodes.size == 0:
        raise DegenerateClassError("empty training mask")
    y_all = g.label_ids
    if np.unique(y_all[nodes]).size < 2:
        raise DegenerateClassError("training mask covers fewer than 2 classes")

    sub = induced_subgraph(g, nodes)
    sub_op = filters.operator(sub, op_kind)
    h_agg = aggregation_score(sub_op, sub.label_matrix(), sub.labels)

    op = filters.operator(g, op_kind)
    x = g.features
    y, c = y_all[nodes], g.class_count
    p_ax = filters.apply(op, x)[nodes]
    p_hx = filters.apply(filters.highpass(op), x)[nodes]
    return HomophilyReport(
        h_edge=edge_homophily(sub),
        h_node=node_homophily(sub, allow_isolated=True),
        h_class=class_homophily(sub, allow_isolated=True),
        h_agg=h_agg,
        h_agg_mod=modified(h_agg),
        s_agg_AX=_s_agg(y, c, p=p_ax),
        s_agg_IX=_s_agg(y, c, p=x[nodes]),
        dd=_dd(y, c, p=p_hx),
    )
