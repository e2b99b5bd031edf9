"""Graph operators: affinities, Laplacians, and low/high-pass filterbank pairs.

Every operator is a dense ``N x N`` float64 matrix tagged with the kind it
was built as. Kind names::

    identity
    A_rw, A_sym                  D^-1 A, D^-1/2 A D^-1/2
    A_rw_renorm, A_sym_renorm    same with A+I, D+I (self-loops added)
    L, L_sym, L_rw               D - A, I - A_sym, I - A_rw
    L_sym_renorm, L_rw_renorm    I - A_sym_renorm, I - A_rw_renorm
    highpass(<kind>)             I - <kind> for an affinity or identity kind
    <kind>^k                     k-th matrix power of an affinity kind

``A_rw_renorm`` is the default aggregation operator everywhere.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import IsolatedNodeError, ValidationError
from .graph import Graph, degrees

DEFAULT_KIND = "A_rw_renorm"

AFFINITY_KINDS = ("A_rw", "A_sym", "A_rw_renorm", "A_sym_renorm")
LAPLACIAN_KINDS = ("L", "L_sym", "L_rw", "L_sym_renorm", "L_rw_renorm")
KINDS = ("identity",) + AFFINITY_KINDS + LAPLACIAN_KINDS

_LAPLACIAN_OF = {
    "L_sym": "A_sym",
    "L_rw": "A_rw",
    "L_sym_renorm": "A_sym_renorm",
    "L_rw_renorm": "A_rw_renorm",
}


@dataclass(frozen=True, eq=False)
class Operator:
    matrix: np.ndarray
    kind: str

    def __post_init__(self):
        self.matrix.setflags(write=False)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def nnz(self) -> int:
        return int(np.count_nonzero(self.matrix))

    @property
    def is_lowpass(self) -> bool:
        """Affinity (or power of one) or identity: something ``highpass`` accepts."""
        base = self.kind.split("^", 1)[0]
        return base in AFFINITY_KINDS or base == "identity"


def identity(n: int) -> Operator:
    return Operator(np.eye(n), "identity")


def _check_degrees(d, kind):
    iso = np.flatnonzero(d == 0)
    if iso.size:
        raise IsolatedNodeError(iso, what=f"operator {kind}")


def affinity(g: Graph, kind: str = DEFAULT_KIND) -> Operator:
    """Random-walk or symmetric affinity, optionally renormalized with self-loops."""
    if kind not in AFFINITY_KINDS:
        raise ValidationError(f"unknown affinity kind {kind!r}; expected one of {AFFINITY_KINDS}")
    a = np.array(g.adjacency())
    d = degrees(g).astype(np.float64)
    if kind.endswith("_renorm"):
        a[np.diag_indices_from(a)] += 1.0
        d = d + 1.0
    else:
        _check_degrees(d, kind)
    if kind.startswith("A_rw"):
        m = a / d[:, None]
    else:
        s = 1.0 / np.sqrt(d)
        m = s[:, None] * a * s[None, :]
    return Operator(m, kind)


def laplacian(g: Graph, kind: str = "L") -> Operator:
    if kind == "L":
        return Operator(np.diag(degrees(g).astype(np.float64)) - g.adjacency(), "L")
    if kind not in _LAPLACIAN_OF:
        raise ValidationError(f"unknown Laplacian kind {kind!r}; expected one of {LAPLACIAN_KINDS}")
    a = affinity(g, _LAPLACIAN_OF[kind])
    return Operator(np.eye(g.n_nodes) - a.matrix, kind)


def operator(g: Graph, kind: str = DEFAULT_KIND) -> Operator:
    """Any named kind, including ``highpass(<kind>)`` and ``<kind>^k``."""
    if kind == "identity":
        return identity(g.n_nodes)
    if kind.startswith("highpass(") and kind.endswith(")"):
        return highpass(operator(g, kind[len("highpass("):-1]))
    if "^" in kind:
        base, k = kind.split("^", 1)
        return power(operator(g, base), int(k))
    if kind in AFFINITY_KINDS:
        return affinity(g, kind)
    return laplacian(g, kind)


def highpass(a: Operator) -> Operator:
    """Complementary high-pass filter ``I - a``."""
    if not a.is_lowpass:
        raise ValidationError(f"highpass needs an affinity or identity operator, got {a.kind!r}")
    return Operator(np.eye(a.n) - a.matrix, f"highpass({a.kind})")


def power(a: Operator, k: int) -> Operator:
    """k-hop propagation ``a^k`` (``k >= 1``)."""
    if k < 1:
        raise ValidationError("power must be >= 1")
    if k == 1:
        return a
    if a.kind.split("^", 1)[0] not in AFFINITY_KINDS + ("identity",):
        raise ValidationError(f"power of {a.kind!r} is not supported")
    return Operator(np.linalg.matrix_power(a.matrix, k), f"{a.kind}^{k}")


def apply(op: Operator, m) -> np.ndarray:
    m = np.asarray(m, dtype=np.float64)
    if m.ndim == 1:
        m = m[:, None]
    if m.shape[0] != op.n:
        raise ValidationError(f"dimension mismatch: operator is {op.n}x{op.n}, signal has {m.shape[0]} rows")
    return op.matrix @ m


def filterbank(g: Graph, kind: str = DEFAULT_KIND) -> tuple[Operator, Operator]:
    """``(H_LP, H_HP)`` with ``H_LP + H_HP = I``."""
    lp = operator(g, kind)
    return lp, highpass(lp)


def spectral_radius(m: np.ndarray, iters: int = 5000, tol: float = 1e-12, seed: int = 0) -> float:
    """Largest |eigenvalue| by power iteration on ``m``.

    Assumes a real dominant eigenvalue, which holds for the operators here
    (all are similar to symmetric matrices). Iterates on ``m @ m`` so that a
    ``+-lambda`` pair does not stall convergence.
    """
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(m.shape[0])
    x /= np.linalg.norm(x)
    m2 = m @ m
    lam = 0.0
    for _ in range(iters):
        y = m2 @ x
        ny = np.linalg.norm(y)
        if ny == 0.0:
            return 0.0
        x = y / ny
        if abs(ny - lam) <= tol * max(ny, 1.0):
            lam = ny
            break
        lam = ny
    return float(np.sqrt(lam))
