"""Reverse-mode autodiff over dense float64 matrices.

A :class:`Tape` records every op applied to tensors that require gradients,
together with a closure mapping the output gradient to input gradients.
``backward`` replays the records in reverse order exactly once.

Usage::

    tape = Tape()
    with tape:
        w = Tensor(w0, requires_grad=True)
        loss = total(matmul(x, w))
    tape.backward(loss)
    w.grad
"""
from __future__ import annotations

import contextvars

import numpy as np

from ..errors import NumericError, ValidationError

_active = contextvars.ContextVar("active_tape", default=None)

PROB_FLOOR = 1e-12


class Tensor:
    __slots__ = ("value", "grad", "requires_grad", "name")

    def __init__(self, value, requires_grad=False, name=None):
        v = np.asarray(value, dtype=np.float64)
        if v.ndim == 0:
            v = v.reshape(1, 1)
        elif v.ndim == 1:
            v = v.reshape(1, -1)
        self.value = v
        self.grad = None
        self.requires_grad = requires_grad
        self.name = name

    @property
    def shape(self):
        return self.value.shape

    def zero_grad(self):
        self.grad = None

    def item(self) -> float:
        if self.value.size != 1:
            raise ValidationError(f"item() on tensor of shape {self.shape}")
        return float(self.value[0, 0])

    def __repr__(self):
        tag = f" {self.name}" if self.name else ""
        return f"Tensor{tag}(shape={self.shape}, requires_grad={self.requires_grad})"


class Tape:
    def __init__(self):
        self.records = []
        self._token = None
        self._done = False

    def __enter__(self):
        self._token = _active.set(self)
        return self

    def __exit__(self, *exc):
        _active.reset(self._token)
        self._token = None

    def reset(self):
        self.records.clear()
        self._done = False

    def record(self, out, inputs, backward_fn):
        if self._done:
            raise ValidationError("tape already consumed by backward(); call reset()")
        self.records.append((out, inputs, backward_fn))

    def backward(self, loss: Tensor):
        if self._done:
            raise ValidationError("backward() already ran on this tape; call reset() first")
        if loss.value.size != 1:
            raise ValidationError(f"backward needs a scalar loss, got shape {loss.shape}")
        self._done = True
        loss.grad = np.ones_like(loss.value)
        for out, inputs, fn in reversed(self.records):
            if out.grad is None:
                continue
            for t, g in zip(inputs, fn(out.grad)):
                if g is None or not t.requires_grad:
                    continue
                t.grad = g if t.grad is None else t.grad + g


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _emit(value, inputs, backward_fn) -> Tensor:
    need = any(t.requires_grad for t in inputs)
    out = Tensor(value, requires_grad=need)
    tape = _active.get()
    if need and tape is not None:
        tape.record(out, inputs, backward_fn)
    return out


def _same_shape(a, b, op):
    if a.shape != b.shape:
        raise ValidationError(f"{op}: shape mismatch {a.shape} vs {b.shape}")


# --------------------------------------------------------------- primitives


def matmul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    if a.shape[1] != b.shape[0]:
        raise ValidationError(f"matmul: shape mismatch {a.shape} @ {b.shape}")
    av, bv = a.value, b.value

    def back(g):
        return (g @ bv.T if a.requires_grad else None,
                av.T @ g if b.requires_grad else None)

    return _emit(av @ bv, (a, b), back)


def add(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    _same_shape(a, b, "add")
    return _emit(a.value + b.value, (a, b), lambda g: (g, g))


def sub(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    _same_shape(a, b, "sub")
    return _emit(a.value - b.value, (a, b), lambda g: (g, -g))


def mul(a, b) -> Tensor:
    """Elementwise product."""
    a, b = _as_tensor(a), _as_tensor(b)
    _same_shape(a, b, "mul")
    av, bv = a.value, b.value
    return _emit(av * bv, (a, b), lambda g: (g * bv, g * av))


def scale(a, c: float) -> Tensor:
    a = _as_tensor(a)
    c = float(c)
    return _emit(a.value * c, (a,), lambda g: (g * c,))


def relu(a) -> Tensor:
    a = _as_tensor(a)
    keep = a.value > 0
    return _emit(np.where(keep, a.value, 0.0), (a,), lambda g: (g * keep,))


def sigmoid(a) -> Tensor:
    a = _as_tensor(a)
    x = a.value
    # split by sign so exp never overflows
    e = np.exp(-np.abs(x))
    s = np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    return _emit(s, (a,), lambda g: (g * s * (1.0 - s),))


def _softmax(x):
    e = np.exp(x - x.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def softmax_rows(a) -> Tensor:
    a = _as_tensor(a)
    s = _softmax(a.value)

    def back(g):
        return (s * (g - (g * s).sum(axis=1, keepdims=True)),)

    return _emit(s, (a,), back)


def row_scale(d, m) -> Tensor:
    """``diag(d) @ m`` for a column tensor ``d`` of shape (N, 1)."""
    d, m = _as_tensor(d), _as_tensor(m)
    if d.shape != (m.shape[0], 1):
        raise ValidationError(f"row_scale: expected scale of shape ({m.shape[0]}, 1), got {d.shape}")
    dv, mv = d.value, m.value

    def back(g):
        return ((g * mv).sum(axis=1, keepdims=True) if d.requires_grad else None,
                g * dv)

    return _emit(dv * mv, (d, m), back)


def concat_cols(*ts) -> Tensor:
    ts = tuple(_as_tensor(t) for t in ts)
    rows = {t.shape[0] for t in ts}
    if len(rows) != 1:
        raise ValidationError(f"concat_cols: row counts differ {[t.shape for t in ts]}")
    bounds = np.cumsum([0] + [t.shape[1] for t in ts])

    def back(g):
        return tuple(g[:, bounds[i]:bounds[i + 1]] for i in range(len(ts)))

    return _emit(np.concatenate([t.value for t in ts], axis=1), ts, back)


def column(a, j: int) -> Tensor:
    """Column ``j`` as an (N, 1) tensor."""
    a = _as_tensor(a)
    if not 0 <= j < a.shape[1]:
        raise ValidationError(f"column {j} out of range for shape {a.shape}")

    def back(g):
        out = np.zeros_like(a.value)
        out[:, j:j + 1] = g
        return (out,)

    return _emit(a.value[:, j:j + 1].copy(), (a,), back)


def rows(a, idx) -> Tensor:
    """Row subset ``a[idx]``."""
    a = _as_tensor(a)
    idx = np.asarray(idx)

    def back(g):
        out = np.zeros_like(a.value)
        np.add.at(out, idx, g)
        return (out,)

    return _emit(a.value[idx], (a,), back)


def total(a) -> Tensor:
    """Sum of all entries, as a 1x1 tensor."""
    a = _as_tensor(a)
    return _emit(np.array([[a.value.sum()]]), (a,), lambda g: (np.full_like(a.value, g[0, 0]),))


def dropout(a, p: float, rng, train: bool) -> Tensor:
    """Inverted dropout; identity when not training or ``p == 0``."""
    a = _as_tensor(a)
    if not 0.0 <= p < 1.0:
        raise ValidationError(f"dropout probability must lie in [0, 1), got {p}")
    if not train or p == 0.0:
        return a
    mask = (rng.random(a.shape) >= p) / (1.0 - p)
    return _emit(a.value * mask, (a,), lambda g: (g * mask,))


# ------------------------------------------------------------------- losses


def cross_entropy(y_pred, z) -> Tensor:
    """``-sum_i log y_pred[i, class(i)]`` for row-stochastic ``y_pred``.

    Probabilities are floored at ``PROB_FLOOR`` before the log, so an exact
    zero gives a large finite loss instead of ``inf``. Negative entries at a
    true class raise :class:`NumericError`.
    """
    y_pred = _as_tensor(y_pred)
    z = np.asarray(z, dtype=np.float64)
    _same_shape(y_pred, Tensor(z), "cross_entropy")
    yv = y_pred.value
    if not np.all(np.isfinite(yv)):
        raise NumericError("cross_entropy: non-finite probabilities")
    if not np.allclose(yv.sum(axis=1), 1.0, atol=1e-8, rtol=0):
        raise ValidationError("cross_entropy: rows of y_pred must sum to 1")
    if np.any((yv < 0.0) & (z > 0)):
        raise NumericError("cross_entropy: negative probability at a true class")
    safe = np.maximum(yv, PROB_FLOOR)
    value = -(z * np.log(safe)).sum()

    def back(g):
        return (-g[0, 0] * z / safe,)

    return _emit(np.array([[value]]), (y_pred,), back)


def softmax_cross_entropy(logits, z) -> Tensor:
    """Fused, log-sum-exp stable ``cross_entropy(softmax_rows(logits), z)``.

    Gradient with respect to the logits is ``softmax(logits) - z`` (scaled by
    the label mass of each row).
    """
    logits = _as_tensor(logits)
    z = np.asarray(z, dtype=np.float64)
    _same_shape(logits, Tensor(z), "softmax_cross_entropy")
    x = logits.value
    if not np.all(np.isfinite(x)):
        raise NumericError("softmax_cross_entropy: non-finite logits")
    shifted = x - x.max(axis=1, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    log_p = shifted - lse
    value = -(z * log_p).sum()
    p = np.exp(log_p)
    mass = z.sum(axis=1, keepdims=True)

    def back(g):
        return (g[0, 0] * (p * mass - z),)

    return _emit(np.array([[value]]), (logits,), back)


def squared_norm(a) -> Tensor:
    a = _as_tensor(a)
    v = a.value
    return _emit(np.array([[np.sum(v * v)]]), (a,), lambda g: (2.0 * g[0, 0] * v,))
