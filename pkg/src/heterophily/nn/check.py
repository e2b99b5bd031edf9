"""Gradient verification: finite differences and the closed-form softmax-GCN gradient."""
from __future__ import annotations

import numpy as np

from ..errors import ValidationError
from .tape import Tape, _softmax


def relative_error(analytic, numeric) -> float:
    """``||a - n|| / max(||a||, ||n||)`` (0 when both vanish)."""
    a = np.asarray(analytic, dtype=np.float64)
    n = np.asarray(numeric, dtype=np.float64)
    scale = max(np.linalg.norm(a), np.linalg.norm(n))
    if scale == 0.0:
        return 0.0
    return float(np.linalg.norm(a - n) / scale)


def tape_gradients(model_fn, params):
    for p in params:
        p.grad = None
    tape = Tape()
    with tape:
        loss = model_fn()
    tape.backward(loss)
    return [np.zeros_like(p.value) if p.grad is None else p.grad.copy() for p in params]


def numeric_gradients(model_fn, params, eps=1e-6):
    out = []
    for p in params:
        g = np.zeros_like(p.value)
        flat = p.value.reshape(-1)
        gflat = g.reshape(-1)
        for i in range(flat.size):
            old = flat[i]
            flat[i] = old + eps
            up = model_fn().item()
            flat[i] = old - eps
            down = model_fn().item()
            flat[i] = old
            gflat[i] = (up - down) / (2.0 * eps)
        out.append(g)
    return out


def grad_check(model_fn, params, eps=1e-6, per_param=False):
    """Worst relative error between tape and central-difference gradients.

    ``model_fn()`` must rebuild the scalar loss from the current values of
    ``params`` deterministically (disable dropout).
    """
    analytic = tape_gradients(model_fn, params)
    numeric = numeric_gradients(model_fn, params, eps)
    errs = [relative_error(a, n) for a, n in zip(analytic, numeric)]
    if per_param:
        return errs
    return max(errs) if errs else 0.0


def analytic_gcn_grad(a_hat, x, w, z) -> np.ndarray:
    """``dL/dW = X^T A^T (softmax(A X W) - Z)`` for summed cross-entropy."""
    a = np.asarray(getattr(a_hat, "matrix", a_hat), dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    n = a.shape[0]
    if a.shape != (n, n) or x.shape[0] != n or x.shape[1] != w.shape[0] \
            or z.shape != (n, w.shape[1]):
        raise ValidationError(
            f"analytic_gcn_grad: incompatible shapes A{a.shape} X{x.shape} W{w.shape} Z{z.shape}"
        )
    ax = a @ x
    y = _softmax(ax @ w)
    return ax.T @ (y - z)
