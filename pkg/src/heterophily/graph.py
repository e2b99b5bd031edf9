"""Undirected, unweighted graphs with dense node features and one-hot labels.

A :class:`Graph` stores its edge set canonically as an ``(E, 2)`` integer
array of ``(u, v)`` pairs with ``u < v``, sorted lexicographically. The
dense adjacency matrix is derived on demand.

On-disk layout (see :func:`load_graph` / :func:`save_graph`):

* edge list: whitespace separated ``u v`` per line, 0-based, ``#`` comments
* features: CSV, one row per node, optional header
* labels: CSV, either one integer class id per line or a one-hot row
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import GraphFormatError, ValidationError

EDGE_FILE = "edges.txt"
FEATURE_FILE = "features.csv"
LABEL_FILE = "labels.csv"


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable graph container.

    Construct through :func:`make_graph` (canonicalizes and validates) unless
    you deliberately need an unvalidated instance, e.g. to exercise
    :func:`validate`.
    """

    n_nodes: int
    edges: np.ndarray
    features: np.ndarray
    labels: np.ndarray
    _adj: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        for arr in (self.edges, self.features, self.labels):
            if isinstance(arr, np.ndarray):
                arr.setflags(write=False)

    @property
    def class_count(self) -> int:
        return int(self.labels.shape[1])

    @property
    def n_edges(self) -> int:
        return int(self.edges.shape[0])

    @property
    def n_features(self) -> int:
        return int(self.features.shape[1])

    @property
    def label_ids(self) -> np.ndarray:
        return np.argmax(self.labels, axis=1)

    def label_matrix(self) -> np.ndarray:
        """Labels as a float64 one-hot matrix, for use in algebra."""
        return self.labels.astype(np.float64)

    def adjacency(self) -> np.ndarray:
        """Dense symmetric 0/1 adjacency (float64, zero diagonal)."""
        if self._adj is None:
            a = np.zeros((self.n_nodes, self.n_nodes))
            if self.n_edges:
                u, v = self.edges[:, 0], self.edges[:, 1]
                a[u, v] = 1.0
                a[v, u] = 1.0
            a.setflags(write=False)
            object.__setattr__(self, "_adj", a)
        return self._adj

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return (
            self.n_nodes == other.n_nodes
            and np.array_equal(self.edges, other.edges)
            and np.array_equal(self.features, other.features)
            and np.array_equal(self.labels, other.labels)
        )

    __hash__ = None


def canonical_edges(pairs, n_nodes=None) -> np.ndarray:
    """Map any iterable of node pairs to sorted unique ``u < v`` rows.

    Self-loops raise :class:`ValidationError`.
    """
    arr = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    if arr.size == 0:
        return np.zeros((0, 2), dtype=np.int64)
    loops = np.flatnonzero(arr[:, 0] == arr[:, 1])
    if loops.size:
        raise ValidationError(f"self-loop on node {int(arr[loops[0], 0])}")
    if arr.min() < 0:
        raise ValidationError("negative node index in edge list")
    if n_nodes is not None and arr.max() >= n_nodes:
        raise ValidationError(
            f"edge references node {int(arr.max())} but graph has {n_nodes} nodes"
        )
    arr = np.sort(arr, axis=1)
    return np.unique(arr, axis=0)


def one_hot(ids, n_classes=None) -> np.ndarray:
    ids = np.asarray(ids, dtype=np.int64)
    if ids.size and ids.min() < 0:
        raise ValidationError("negative class id")
    c = int(ids.max()) + 1 if n_classes is None else int(n_classes)
    if ids.size and ids.max() >= c:
        raise ValidationError(f"class id {int(ids.max())} >= n_classes={c}")
    z = np.zeros((ids.size, c), dtype=np.int64)
    z[np.arange(ids.size), ids] = 1
    return z


def make_graph(edges, features, labels, n_classes=None) -> Graph:
    """Build a validated :class:`Graph`.

    ``labels`` may be a vector of class ids or a one-hot matrix.
    ``features`` may be ``None`` for a structure-only graph (zero columns).
    """
    labels = np.asarray(labels)
    if labels.ndim == 1:
        labels = one_hot(labels, n_classes)
    else:
        labels = labels.astype(np.int64, copy=True)
    n = labels.shape[0]
    if features is None:
        features = np.zeros((n, 0))
    features = np.array(features, dtype=np.float64, ndmin=2, copy=True)
    if features.shape[0] != n:
        raise ValidationError(
            f"dimension mismatch: {features.shape[0]} feature rows vs {n} label rows"
        )
    g = Graph(n, canonical_edges(edges, n), features, labels)
    problems = validate(g)
    if problems:
        raise ValidationError("; ".join(problems))
    return g


def degrees(g: Graph) -> np.ndarray:
    """Neighbor count of every node."""
    return np.bincount(g.edges.ravel(), minlength=g.n_nodes).astype(np.int64)


def validate(g: Graph) -> list[str]:
    """List every violated graph invariant; empty means valid."""
    out = []
    n = g.n_nodes
    e = np.asarray(g.edges)
    if e.ndim != 2 or (e.size and e.shape[1] != 2):
        return [f"edges: expected shape (E, 2), got {e.shape}"]
    for k, (u, v) in enumerate(e):
        if u == v:
            out.append(f"self-loop: edge {k} is ({u}, {v})")
        elif not (0 <= u < n and 0 <= v < n):
            out.append(f"edge {k} ({u}, {v}) out of range for N={n}")
    if e.size:
        canon = np.sort(e, axis=1)
        _, counts = np.unique(canon, axis=0, return_counts=True)
        if (counts > 1).any():
            out.append("duplicate edges present")
    if g.features.ndim != 2 or g.features.shape[0] != n:
        out.append(f"features: expected {n} rows, got shape {g.features.shape}")
    z = np.asarray(g.labels)
    if z.ndim != 2 or z.shape[0] != n:
        out.append(f"labels: expected {n} rows, got shape {z.shape}")
        return out
    bad_vals = np.flatnonzero(((z != 0) & (z != 1)).any(axis=1))
    for i in bad_vals:
        out.append(f"one-hot: row {i} has entries other than 0/1")
    sums = z.sum(axis=1)
    for i in np.flatnonzero(sums != 1):
        if i not in bad_vals:
            out.append(f"one-hot: row {i} sums to {sums[i]}")
    return out


def induced_subgraph(g: Graph, nodes) -> Graph:
    """Subgraph on ``nodes`` (relabelled 0..k-1 in the given order)."""
    nodes = np.asarray(nodes, dtype=np.int64)
    index = np.full(g.n_nodes, -1, dtype=np.int64)
    index[nodes] = np.arange(nodes.size)
    keep = (index[g.edges[:, 0]] >= 0) & (index[g.edges[:, 1]] >= 0)
    sub = index[g.edges[keep]]
    return Graph(
        int(nodes.size),
        canonical_edges(sub),
        g.features[nodes].copy(),
        g.labels[nodes].copy(),
    )


def permute(g: Graph, perm) -> Graph:
    """Relabel node ``i`` as ``perm[i]``."""
    perm = np.asarray(perm, dtype=np.int64)
    inv = np.argsort(perm)
    return Graph(
        g.n_nodes,
        canonical_edges(perm[g.edges]),
        g.features[inv].copy(),
        g.labels[inv].copy(),
    )


# ---------------------------------------------------------------- file I/O


def _read_edges(path: Path):
    pairs = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise GraphFormatError(path, lineno, f"expected 'u v', got {raw.strip()!r}")
            try:
                u, v = int(parts[0]), int(parts[1])
            except ValueError:
                raise GraphFormatError(path, lineno, f"non-integer node id in {raw.strip()!r}")
            if u == v:
                raise GraphFormatError(path, lineno, f"self-loop on node {u}")
            if u < 0 or v < 0:
                raise GraphFormatError(path, lineno, "negative node id")
            pairs.append((u, v, lineno))
    return pairs


def _read_rows(path: Path, header: bool, parse):
    rows = []
    with open(path, newline="") as fh:
        for lineno, rec in enumerate(csv.reader(fh), 1):
            if header and lineno == 1:
                continue
            if not rec or all(not c.strip() for c in rec):
                continue
            try:
                rows.append([parse(c) for c in rec])
            except ValueError:
                raise GraphFormatError(path, lineno, f"cannot parse row {','.join(rec)!r}")
            if len(rows[-1]) != len(rows[0]):
                raise GraphFormatError(
                    path, lineno, f"expected {len(rows[0])} columns, got {len(rows[-1])}"
                )
    return rows


def load_graph(edge_path, feature_path, label_path, *, features_header=False,
               labels_header=False, n_classes=None) -> Graph:
    """Read and validate a graph from its three files."""
    edge_path, feature_path, label_path = map(Path, (edge_path, feature_path, label_path))
    pairs = _read_edges(edge_path)
    feats = _read_rows(feature_path, features_header, float)
    labs = _read_rows(label_path, labels_header, int)

    n = len(labs)
    if len(feats) != n:
        raise GraphFormatError(
            feature_path, None,
            f"dimension mismatch: {len(feats)} feature rows vs {n} label rows",
        )
    for u, v, lineno in pairs:
        if max(u, v) >= n:
            raise GraphFormatError(
                edge_path, lineno, f"dimension mismatch: node {max(u, v)} but N={n}"
            )

    lab = np.asarray(labs, dtype=np.int64)
    if lab.ndim == 2 and lab.shape[1] == 1:
        labels = one_hot(lab[:, 0], n_classes)
    else:
        labels = lab.reshape(n, -1)
        for i, row in enumerate(labels):
            if ((row != 0) & (row != 1)).any() or row.sum() != 1:
                raise GraphFormatError(label_path, None, f"label row {i} is not one-hot")
    features = np.asarray(feats, dtype=np.float64).reshape(n, -1)
    return make_graph([(u, v) for u, v, _ in pairs], features, labels)


def load_graph_dir(directory, **kwargs) -> Graph:
    d = Path(directory)
    return load_graph(d / EDGE_FILE, d / FEATURE_FILE, d / LABEL_FILE, **kwargs)


def save_graph(g: Graph, directory, *, one_hot_labels=False) -> Path:
    """Write the three graph files into ``directory``.

    Features are written with 17 significant digits, which round-trips
    float64 exactly.
    """
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    with open(d / EDGE_FILE, "w") as fh:
        fh.write(f"# {g.n_nodes} nodes, {g.n_edges} undirected edges\n")
        for u, v in g.edges:
            fh.write(f"{u} {v}\n")
    with open(d / FEATURE_FILE, "w") as fh:
        for row in g.features:
            fh.write(",".join(f"{x:.17g}" for x in row) + "\n")
    with open(d / LABEL_FILE, "w") as fh:
        # ids cannot express a trailing empty class, fall back to one-hot
        if one_hot_labels or g.labels[:, -1].sum() == 0:
            for row in g.labels:
                fh.write(",".join(str(int(x)) for x in row) + "\n")
        else:
            for c in g.label_ids:
                fh.write(f"{c}\n")
    return d
