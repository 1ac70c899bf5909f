"""Float64 reverse-mode differentiation core."""

from __future__ import annotations

from gpas_summarizer.autodiff.gradcheck import EntryError, GradCheckReport, grad_check, relative_error
from gpas_summarizer.autodiff.rng import ALGORITHMS, RngStream
from gpas_summarizer.autodiff.tensor import (
    DTYPE,
    TensorNode,
    add,
    add_bias,
    backward,
    bce_with_logits,
    concat,
    dropout,
    elementwise,
    expand,
    gather_row,
    gather_rows,
    is_grad_enabled,
    log_softmax_rows,
    matmul,
    mean_all,
    mul,
    no_grad,
    pick,
    reset,
    reshape,
    scale,
    scale_rows,
    select,
    sigmoid,
    slice_axis,
    softmax_rows,
    stack,
    sub,
    sum_all,
    tanh,
    tensor,
    trace,
    weighted_sum,
    zeros,
)

__all__ = [
    "ALGORITHMS",
    "DTYPE",
    "EntryError",
    "GradCheckReport",
    "RngStream",
    "TensorNode",
    "add",
    "add_bias",
    "backward",
    "bce_with_logits",
    "concat",
    "dropout",
    "elementwise",
    "expand",
    "gather_row",
    "gather_rows",
    "grad_check",
    "is_grad_enabled",
    "log_softmax_rows",
    "matmul",
    "mean_all",
    "mul",
    "no_grad",
    "pick",
    "relative_error",
    "reset",
    "reshape",
    "scale",
    "scale_rows",
    "select",
    "sigmoid",
    "slice_axis",
    "softmax_rows",
    "stack",
    "sub",
    "sum_all",
    "tanh",
    "tensor",
    "trace",
    "weighted_sum",
    "zeros",
]
