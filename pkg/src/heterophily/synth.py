"""Synthetic heterophily graphs and the expected-similarity-gap oracles.

Generation follows the stub model: each node draws ``d_intra`` endpoints
uniformly among the other members of its class and
``int(d_intra / h - d_intra)`` endpoints uniformly among all nodes of other
classes (multinomial draws, so an endpoint can repeat). The directed stubs
are symmetrized into a simple undirected graph.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import ConfigError, ValidationError
from .graph import Graph, canonical_edges, load_graph_dir

MAX_REDRAWS = 100


def homophily_grid() -> list[float]:
    """The 28 edge-homophily levels: 0.005..0.05 by 0.005 and 0.05..0.95 by 0.05."""
    fine = [round(0.005 * k, 3) for k in range(1, 11)]
    coarse = [round(0.05 * k, 2) for k in range(2, 20)]
    return fine + coarse


@dataclass(frozen=True)
class SynthConfig:
    h_target: float
    classes: int = 5
    nodes_per_class: int = 400
    d_intra: int = 2
    seed: int = 0
    feature_mode: str = "gaussian_means"
    base_graph: str | None = None
    feature_dim: int = 16
    separation: float = 2.0
    sigma: float = 1.0

    @property
    def inter_stubs(self) -> int:
        return int(self.d_intra / self.h_target - self.d_intra)

    def check(self):
        if not (0.0 < self.h_target <= 1.0):
            raise ConfigError(f"h_target must lie in (0, 1], got {self.h_target}")
        if self.classes < 2:
            raise ConfigError("need at least 2 classes")
        if self.nodes_per_class < 2:
            raise ConfigError("need at least 2 nodes per class")
        if self.d_intra < 1:
            raise ConfigError("d_intra must be >= 1")
        if self.inter_stubs < 0:
            raise ConfigError("inter-class stub count is negative")
        if self.feature_mode not in ("gaussian_means", "from_base_graph"):
            raise ConfigError(f"unknown feature_mode {self.feature_mode!r}")
        if self.feature_mode == "from_base_graph" and not self.base_graph:
            raise ConfigError("from_base_graph needs base_graph")
        if self.feature_dim < 1:
            raise ConfigError("feature_dim must be >= 1")


def _draw_stubs(rng, members, others, d_intra, n_inter):
    """Stub endpoints for every node of one class, as (src, dst) arrays."""
    k = members.size
    src, dst = [], []
    counts = rng.multinomial(d_intra, np.full(k - 1, 1.0 / (k - 1)), size=k)
    rows, slots = np.nonzero(counts)
    # slot j of node i means the j-th class member other than i itself
    src.append(members[rows])
    dst.append(members[slots + (slots >= rows)])
    if n_inter > 0:
        counts = rng.multinomial(n_inter, np.full(others.size, 1.0 / others.size), size=k)
        rows, slots = np.nonzero(counts)
        src.append(members[rows])
        dst.append(others[slots])
    return np.concatenate(src), np.concatenate(dst)


def _structure(cfg: SynthConfig, rng):
    n = cfg.classes * cfg.nodes_per_class
    y = np.repeat(np.arange(cfg.classes), cfg.nodes_per_class)
    parts = []
    for c in range(cfg.classes):
        members = np.flatnonzero(y == c)
        others = np.flatnonzero(y != c)
        parts.append(_draw_stubs(rng, members, others, cfg.d_intra, cfg.inter_stubs))
    src = np.concatenate([p[0] for p in parts])
    dst = np.concatenate([p[1] for p in parts])
    edges = canonical_edges(np.stack([src, dst], axis=1))

    for _ in range(MAX_REDRAWS):
        deg = np.bincount(edges.ravel(), minlength=n)
        iso = np.flatnonzero(deg == 0)
        if iso.size == 0:
            return edges, y
        extra = []
        for i in iso:
            c = y[i]
            s, d = _draw_stubs(rng, np.array([i]), np.flatnonzero(y != c), 0, cfg.inter_stubs)
            same = np.flatnonzero((y == c) & (np.arange(n) != i))
            pick = same[np.nonzero(rng.multinomial(cfg.d_intra, np.full(same.size, 1.0 / same.size)))[0]]
            extra.append(np.stack([np.concatenate([s, np.full(pick.size, i)]),
                                   np.concatenate([d, pick])], axis=1))
        edges = canonical_edges(np.concatenate([edges] + extra))
    raise ValidationError(f"isolated nodes remain after {MAX_REDRAWS} redraws")


def _features(cfg: SynthConfig, y, rng):
    n = y.size
    if cfg.feature_mode == "gaussian_means":
        mu = rng.standard_normal((cfg.classes, cfg.feature_dim))
        mu *= cfg.separation / np.linalg.norm(mu, axis=1, keepdims=True)
        return mu[y] + cfg.sigma * rng.standard_normal((n, cfg.feature_dim))
    path = Path(cfg.base_graph)
    if not path.is_dir():
        raise ConfigError(f"base graph directory not readable: {path}")
    base = load_graph_dir(path)
    by = base.label_ids
    x = np.empty((n, base.n_features))
    for c in range(cfg.classes):
        pool = np.flatnonzero(by == c)
        if pool.size == 0:
            raise ConfigError(f"base graph has no nodes of class {c}")
        rows = np.flatnonzero(y == c)
        x[rows] = base.features[rng.choice(pool, size=rows.size, replace=True)]
    return x


def generate(cfg: SynthConfig) -> Graph:
    """Draw one synthetic graph; deterministic in ``cfg.seed``."""
    cfg.check()
    rng = np.random.default_rng(cfg.seed)
    edges, y = _structure(cfg, rng)
    x = _features(cfg, y, rng)
    z = np.zeros((y.size, cfg.classes), dtype=np.int64)
    z[np.arange(y.size), y] = 1
    return Graph(int(y.size), edges, x, z)


# ------------------------------------------------------------ theory oracles


def _check_domain(h, d, c):
    if not (0 <= h <= 1):
        raise ConfigError(f"h must lie in [0, 1], got {h}")
    if d < 1 or int(d) != d:
        raise ConfigError(f"d must be a positive integer, got {d}")
    if c < 2 or int(c) != c:
        raise ConfigError(f"c must be an integer >= 2, got {c}")


def g_of_h(h, d, c):
    """Expected same-class minus other-class similarity gap of ``S(A_rw_renorm, Z)``.

    ``((c-1)(hd+1) - (1-h)d)^2 / ((c-1)(d+1))^2`` for a d-regular graph whose
    edges are independently intra-class with probability ``h``. Exact when
    ``h`` is a :class:`~fractions.Fraction`.
    """
    _check_domain(h, d, c)
    num = (c - 1) * (h * d + 1) - (1 - h) * d
    den = (c - 1) * (d + 1)
    return (num * num) / (den * den)


def optimal_h(d_intra, c) -> Fraction:
    """Edge homophily at which the gap vanishes, for fixed intra-class degree."""
    if d_intra < 1 or int(d_intra) != d_intra:
        raise ConfigError("d_intra must be a positive integer")
    if c < 2 or int(c) != c:
        raise ConfigError("c must be an integer >= 2")
    return Fraction(int(d_intra), int(c * d_intra + c - 1))


def _rows(rng, h, d, c, n):
    """Rows of A_rw_renorm Z for ``n`` class-0 nodes of the i.i.d. edge model."""
    intra = rng.binomial(d, h, size=n)
    inter = rng.multinomial(d - intra, np.full(c - 1, 1.0 / (c - 1)))
    out = np.empty((n, c))
    out[:, 0] = intra + 1
    out[:, 1:] = inter
    return out / (d + 1)


def monte_carlo_g(h, d, c, trials, seed) -> tuple[float, float]:
    """Sample mean and standard error of ``S[v,u1] - S[v,u2]``.

    ``v`` and ``u1`` share class 0, ``u2`` is in class 1; each node's ``d``
    edges are drawn independently.
    """
    _check_domain(h, d, c)
    if trials < 1:
        raise ConfigError("trials must be >= 1")
    h = float(h)
    rng = np.random.default_rng(seed)
    v = _rows(rng, h, d, c, trials)
    u1 = _rows(rng, h, d, c, trials)
    u2 = _rows(rng, h, d, c, trials)
    u2[:, [0, 1]] = u2[:, [1, 0]]  # relabel: own class of u2 becomes 1
    samples = np.einsum("ij,ij->i", v, u1) - np.einsum("ij,ij->i", v, u2)
    mean = float(samples.mean())
    stderr = float(samples.std(ddof=1) / np.sqrt(trials)) if trials > 1 else float("inf")
    return mean, stderr


ORACLE_GRID = (
    (Fraction(1, 7), 14, 5),
    (Fraction(1), 4, 3),
    (Fraction(0), 3, 2),
    (Fraction(1, 2), 4, 2),
    (Fraction(1, 3), 6, 3),
    (Fraction(1, 10), 20, 5),
    (Fraction(1, 5), 10, 5),
    (Fraction(9, 10), 10, 4),
    (Fraction(1, 20), 40, 5),
    (Fraction(3, 4), 8, 7),
)


def oracle_table(grid=ORACLE_GRID, trials=100_000, seed=0):
    """Rows of ``(h, d, c, g_closed_form, g_monte_carlo, stderr)``."""
    out = []
    for i, (h, d, c) in enumerate(grid):
        est, se = monte_carlo_g(h, d, c, trials, seed + i)
        out.append((float(h), d, c, float(g_of_h(h, d, c)), est, se))
    return out


# ------------------------------------------------------ limitation scenario


def limitation_scenario(small_clusters: int, small_size: int, big_size: int,
                        seed: int, links: int = 3) -> Graph:
    """Small labelled cliques, each node wired to ``links`` nodes of one big clique.

    Labels: big cluster is class 0, small cluster ``i`` is class ``i + 1``.
    Features are the one-hot labels.
    """
    if small_clusters < 2:
        raise ConfigError("need at least 2 small clusters")
    if small_size < 2 or big_size < 2:
        raise ConfigError("cluster sizes must be >= 2")
    if not (1 <= links <= big_size):
        raise ConfigError("links must lie in [1, big_size]")
    rng = np.random.default_rng(seed)
    big = np.arange(big_size)
    y = [0] * big_size
    pairs = [(i, j) for i in range(big_size) for j in range(i + 1, big_size)]
    start = big_size
    for k in range(small_clusters):
        members = np.arange(start, start + small_size)
        y += [k + 1] * small_size
        pairs += [(int(i), int(j)) for a, i in enumerate(members) for j in members[a + 1:]]
        for i in members:
            for b in rng.choice(big, size=links, replace=False):
                pairs.append((int(i), int(b)))
        start += small_size
    y = np.asarray(y)
    z = np.zeros((y.size, small_clusters + 1), dtype=np.int64)
    z[np.arange(y.size), y] = 1
    return Graph(int(y.size), canonical_edges(pairs), z.astype(np.float64), z)

