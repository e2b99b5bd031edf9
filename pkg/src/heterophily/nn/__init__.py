"""Minimal dense reverse-mode autodiff, losses, and Adam."""
from .check import analytic_gcn_grad, grad_check, relative_error
from .optim import Adam, AdamState, adam_step, glorot
from .tape import (
    Tape,
    Tensor,
    add,
    column,
    concat_cols,
    cross_entropy,
    dropout,
    matmul,
    mul,
    relu,
    row_scale,
    rows,
    scale,
    sigmoid,
    softmax_cross_entropy,
    softmax_rows,
    squared_norm,
    sub,
    total,
)
