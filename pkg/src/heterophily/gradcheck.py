"""Finite-difference checks for every primitive and every model family.

Each entry is ``(name, worst_relative_error, bound)``. Plain primitives and
models use bound 1e-5, channel-mixing models 1e-4, and the closed-form
softmax-GCN gradient is compared with the tape at 1e-10.
"""
from __future__ import annotations

import numpy as np

from . import models, nn
from .graph import make_graph

PRIMITIVE_BOUND = 1e-5
ACM_BOUND = 1e-4
ANALYTIC_BOUND = 1e-10

MODEL_IDS = ("mlp-1", "mlp-2", "sgc-1", "sgc-2", "gcn", "gcn-3", "snowball-2", "snowball-3")
ACM_IDS = ("acm-sgc-1", "acm-gcn", "acmii-gcn", "acm-snowball-2", "acmii-snowball-3")


def random_graph(rng, n=10, f=5, c=3, p=0.35):
    upper = np.triu(rng.random((n, n)) < p, 1)
    edges = np.argwhere(upper)
    y = np.concatenate([np.arange(c), rng.integers(0, c, n - c)])
    return make_graph(edges, rng.standard_normal((n, f)), y, n_classes=c)


def _primitive_cases(rng):
    n, k = 4, 3

    def leaf(shape=(n, k), away_from_zero=False):
        v = rng.standard_normal(shape)
        if away_from_zero:
            v = np.where(np.abs(v) < 0.1, 0.5, v)
        return nn.Tensor(v, requires_grad=True)

    def project(t):
        # random linear functional so no gradient is trivially uniform
        r = np.random.default_rng(99).standard_normal(t.shape)
        return nn.total(nn.mul(t, r))

    z = np.eye(k)[rng.integers(0, k, n)]
    a, b, sq = leaf(), leaf(), leaf((k, 2))
    d, m = leaf((n, 1)), leaf()
    r = leaf(away_from_zero=True)
    logits = leaf()
    drop_in = leaf()

    return [
        ("matmul", lambda: project(nn.matmul(a, sq)), [a, sq]),
        ("add", lambda: project(nn.add(a, b)), [a, b]),
        ("sub", lambda: project(nn.sub(a, b)), [a, b]),
        ("mul", lambda: project(nn.mul(a, b)), [a, b]),
        ("scale", lambda: project(nn.scale(a, -1.7)), [a]),
        ("relu", lambda: project(nn.relu(r)), [r]),
        ("sigmoid", lambda: project(nn.sigmoid(a)), [a]),
        ("softmax_rows", lambda: project(nn.softmax_rows(a)), [a]),
        ("row_scale", lambda: project(nn.row_scale(d, m)), [d, m]),
        ("concat_cols", lambda: project(nn.concat_cols(a, np.ones((n, 2)), b)), [a, b]),
        ("column", lambda: project(nn.column(a, 1)), [a]),
        ("rows", lambda: project(nn.rows(a, [0, 2, 2])), [a]),
        ("total", lambda: nn.total(nn.mul(a, a)), [a]),
        ("squared_norm", lambda: nn.squared_norm(a), [a]),
        ("dropout", lambda: project(nn.dropout(drop_in, 0.4, np.random.default_rng(5), True)),
         [drop_in]),
        ("cross_entropy", lambda: nn.cross_entropy(nn.softmax_rows(logits), z), [logits]),
        ("softmax_cross_entropy", lambda: nn.softmax_cross_entropy(logits, z), [logits]),
    ]


def _model_case(model_id, g, seed):
    cfg = models.preset(model_id, hidden=6)
    model = models.build(cfg, g, seed=seed)
    z = g.label_matrix()

    def loss():
        return nn.softmax_cross_entropy(model.forward(g.features), z)

    return loss, model.parameters()


def analytic_vs_tape(rng, n=8, f=4, c=3) -> float:
    g = random_graph(rng, n, f, c)
    a = models.graph_filters(models.preset("sgc-1"), g)["LP"]
    w0 = rng.standard_normal((f, c))
    z = g.label_matrix()
    w = nn.Tensor(w0.copy(), requires_grad=True)
    tape = nn.Tape()
    with tape:
        loss = nn.softmax_cross_entropy(nn.matmul(nn.Tensor(a @ g.features), w), z)
    tape.backward(loss)
    return nn.relative_error(w.grad, nn.analytic_gcn_grad(a, g.features, w0, z))


def run_suite(seed: int = 0, eps: float = 1e-6):
    """All checks as a list of ``(name, error, bound)``."""
    rng = np.random.default_rng(seed)
    out = []
    for name, fn, params in _primitive_cases(rng):
        out.append((f"primitive:{name}", nn.grad_check(fn, params, eps), PRIMITIVE_BOUND))
    g = random_graph(rng)
    for i, mid in enumerate(MODEL_IDS + ACM_IDS):
        loss, params = _model_case(mid, g, seed + i)
        bound = ACM_BOUND if mid in ACM_IDS else PRIMITIVE_BOUND
        out.append((f"model:{mid}", nn.grad_check(loss, params, eps), bound))
    out.append(("analytic_gcn_grad", max(analytic_vs_tape(rng) for _ in range(5)), ANALYTIC_BOUND))
    return out
