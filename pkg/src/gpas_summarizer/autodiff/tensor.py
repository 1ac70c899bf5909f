"""TensorNode and the differentiable primitives the summarizer is built from.

Every value in a forward pass is a :class:`TensorNode` wrapping a float64
numpy array.  Operations record their parents and a closure computing local
gradients; :func:`backward` walks the recorded trace once in reverse
topological order and accumulates ``dLoss/dNode`` into ``node.grad``.

There is no implicit broadcasting.  The only shape-changing conveniences are
explicit operations (:func:`add_bias`, :func:`expand`, :func:`scale_rows`),
so a shape bug surfaces as a :class:`DimensionError` at the call that made it.

Example::

    >>> a = tensor([[1.0, 2.0]], requires_grad=True)
    >>> b = tensor([[3.0], [4.0]])
    >>> with trace():
    ...     loss = sum_all(matmul(a, b))
    ...     backward(loss)
    >>> a.grad
    array([[3., 4.]])
"""

from __future__ import annotations

import contextlib
import contextvars
import itertools
from collections.abc import Callable, Iterator, Sequence
from typing import Any

import numpy as np

from gpas_summarizer.autodiff.rng import RngStream
from gpas_summarizer.exceptions import (
    BackwardError,
    ConfigurationError,
    DimensionError,
    IndexLookupError,
    NumericError,
)

DTYPE = np.float64

_trace_ids = itertools.count(1)
_current_trace: contextvars.ContextVar[int] = contextvars.ContextVar("gpas_trace", default=0)
_grad_enabled: contextvars.ContextVar[bool] = contextvars.ContextVar("gpas_grad_enabled", default=True)

BackwardFn = Callable[[np.ndarray], None]


class TensorNode:
    """A dense float64 value participating in a computation trace.

    Attributes:
        data: The value, a float64 ndarray (row-major).
        grad: ``dLoss/dNode`` after :func:`backward`, same shape as ``data``;
            ``None`` until a gradient has reached this node.
        requires_grad: Whether gradients should flow to this node.
        trace_id: ``None`` for leaves (parameters, inputs); for op results the
            id of the trace that was active when they were computed.
        name: Optional label, used by parameter tables and error messages.
    """

    __slots__ = ("data", "grad", "requires_grad", "trace_id", "name", "_parents", "_backward", "_consumed")

    def __init__(self, data: np.ndarray, *, requires_grad: bool = False, name: str | None = None) -> None:
        self.data = data
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self.trace_id: int | None = None
        self.name = name
        self._parents: tuple[TensorNode, ...] = ()
        self._backward: BackwardFn | None = None
        self._consumed = False

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(self.data.shape)

    @property
    def size(self) -> int:
        return int(self.data.size)

    @property
    def is_leaf(self) -> bool:
        return self._backward is None

    def item(self) -> float:
        """Return the value of a single-element node as a Python float."""
        if self.data.size != 1:
            msg = f"item() needs a single-element node, got shape {self.shape}"
            raise DimensionError(msg)
        return float(self.data.reshape(-1)[0])

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return f"TensorNode(shape={self.shape}{label}, requires_grad={self.requires_grad})"


# ---------------------------------------------------------------------------
# Construction and trace management
# ---------------------------------------------------------------------------


def tensor(values: Any, *, requires_grad: bool = False, name: str | None = None) -> TensorNode:
    """Create a leaf node holding a float64 copy of ``values``."""
    data = np.array(values, dtype=DTYPE, copy=True)
    return TensorNode(data, requires_grad=requires_grad, name=name)


def zeros(shape: Sequence[int], *, requires_grad: bool = False, name: str | None = None) -> TensorNode:
    return TensorNode(np.zeros(tuple(shape), dtype=DTYPE), requires_grad=requires_grad, name=name)


@contextlib.contextmanager
def trace() -> Iterator[int]:
    """Open a fresh computation trace; op results created inside carry its id."""
    token = _current_trace.set(next(_trace_ids))
    try:
        yield _current_trace.get()
    finally:
        _current_trace.reset(token)


@contextlib.contextmanager
def no_grad() -> Iterator[None]:
    """Evaluate without recording parents (evaluation and finite differences)."""
    token = _grad_enabled.set(False)
    try:
        yield
    finally:
        _grad_enabled.reset(token)


def is_grad_enabled() -> bool:
    return _grad_enabled.get()


def _result(data: np.ndarray, parents: tuple[TensorNode, ...], backward_fn: BackwardFn) -> TensorNode:
    """Wrap an op output, recording the trace only when a gradient can flow."""
    out = TensorNode(data)
    out.trace_id = _current_trace.get()
    if _grad_enabled.get() and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = parents
        out._backward = backward_fn
    return out


def _accumulate(node: TensorNode, grad: np.ndarray) -> None:
    if not node.requires_grad:
        return
    if grad.shape != node.data.shape:
        msg = f"gradient shape {grad.shape} does not match node shape {node.data.shape}"
        raise DimensionError(msg)
    if node.grad is None:
        node.grad = np.array(grad, dtype=DTYPE, copy=True)
    else:
        node.grad = node.grad + grad


def _topological_order(root: TensorNode) -> list[TensorNode]:
    """Iterative post-order DFS; each node appears once, parents before children."""
    order: list[TensorNode] = []
    visited: set[int] = set()
    stack: list[tuple[TensorNode, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if id(parent) not in visited:
                stack.append((parent, False))
    return order


def backward(loss: TensorNode) -> None:
    """Populate ``grad`` on every ``requires_grad`` node reachable from ``loss``.

    Leaf gradients accumulate across calls (minibatch averaging sums several
    traces into the same parameters); intermediate nodes belong to exactly one
    trace and may be differentiated once.

    Raises:
        BackwardError: If ``loss`` is not a single element, if the trace was
            already differentiated and not :func:`reset`, or if the graph mixes
            intermediate nodes from different traces.
    """
    if loss.size != 1:
        msg = f"backward needs a scalar loss, got shape {loss.shape}"
        raise BackwardError(msg)
    if not loss.requires_grad:
        return
    order = _topological_order(loss)
    for node in order:
        if node.is_leaf:
            continue
        if node._consumed:
            msg = "backward already ran on this trace; call reset(loss) before differentiating it again"
            raise BackwardError(msg)
        if node.trace_id != loss.trace_id:
            msg = f"loss of trace {loss.trace_id} depends on a node from trace {node.trace_id}"
            raise BackwardError(msg)
    for node in order:
        if not node.is_leaf:
            node.grad = None
    loss.grad = np.ones_like(loss.data)
    for node in reversed(order):
        if node.is_leaf or node.grad is None:
            continue
        assert node._backward is not None
        node._backward(node.grad)
        node._consumed = True


def reset(loss: TensorNode) -> None:
    """Clear intermediate gradients of a trace so it may be differentiated again."""
    for node in _topological_order(loss):
        if not node.is_leaf:
            node.grad = None
            node._consumed = False


# ---------------------------------------------------------------------------
# Shape checks
# ---------------------------------------------------------------------------


def _require_same_shape(op: str, a: TensorNode, b: TensorNode) -> None:
    if a.shape != b.shape:
        msg = f"{op}: shapes {a.shape} and {b.shape} differ"
        raise DimensionError(msg)


def _require_finite(op: str, x: np.ndarray) -> None:
    if not np.all(np.isfinite(x)):
        msg = f"{op}: input contains NaN or infinite values"
        raise NumericError(msg)


# ---------------------------------------------------------------------------
# Elementwise
# ---------------------------------------------------------------------------


def add(a: TensorNode, b: TensorNode) -> TensorNode:
    _require_same_shape("add", a, b)

    def _bw(g: np.ndarray) -> None:
        _accumulate(a, g)
        _accumulate(b, g)

    return _result(a.data + b.data, (a, b), _bw)


def sub(a: TensorNode, b: TensorNode) -> TensorNode:
    _require_same_shape("sub", a, b)

    def _bw(g: np.ndarray) -> None:
        _accumulate(a, g)
        _accumulate(b, -g)

    return _result(a.data - b.data, (a, b), _bw)


def mul(a: TensorNode, b: TensorNode) -> TensorNode:
    _require_same_shape("mul", a, b)

    def _bw(g: np.ndarray) -> None:
        _accumulate(a, g * b.data)
        _accumulate(b, g * a.data)

    return _result(a.data * b.data, (a, b), _bw)


def tanh(x: TensorNode) -> TensorNode:
    t = np.tanh(x.data)

    def _bw(g: np.ndarray) -> None:
        _accumulate(x, g * (1.0 - t * t))

    return _result(t, (x,), _bw)


def sigmoid(x: TensorNode) -> TensorNode:
    # Split by sign so exp never overflows.
    z = x.data
    s = np.empty_like(z)
    pos = z >= 0
    s[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    s[~pos] = ez / (1.0 + ez)

    def _bw(g: np.ndarray) -> None:
        _accumulate(x, g * s * (1.0 - s))

    return _result(s, (x,), _bw)


_ELEMENTWISE: dict[str, Callable[..., TensorNode]] = {
    "add": add,
    "mul": mul,
    "tanh": tanh,
    "sigmoid": sigmoid,
}


def elementwise(op: str, *operands: TensorNode) -> TensorNode:
    """Dispatch one of ``add``, ``mul``, ``tanh``, ``sigmoid`` by name."""
    try:
        fn = _ELEMENTWISE[op]
    except KeyError:
        msg = f"unknown elementwise op {op!r}; expected one of {sorted(_ELEMENTWISE)}"
        raise ConfigurationError(msg) from None
    return fn(*operands)


def scale(x: TensorNode, factor: float) -> TensorNode:
    """Multiply by a constant."""

    def _bw(g: np.ndarray) -> None:
        _accumulate(x, g * factor)

    return _result(x.data * factor, (x,), _bw)


def add_bias(x: TensorNode, bias: TensorNode) -> TensorNode:
    """Add a bias row ``[n]`` (or ``[1 × n]``) to every row of ``x [..., n]``."""
    n = x.shape[-1] if x.data.ndim else 0
    if bias.size != n or (bias.data.ndim == 2 and bias.shape[0] != 1) or bias.data.ndim > 2:
        msg = f"add_bias: bias of shape {bias.shape} cannot be added to rows of shape {x.shape}"
        raise DimensionError(msg)
    row = bias.data.reshape(n)

    def _bw(g: np.ndarray) -> None:
        _accumulate(x, g)
        _accumulate(bias, g.reshape(-1, n).sum(axis=0).reshape(bias.shape))

    return _result(x.data + row, (x, bias), _bw)


def scale_rows(x: TensorNode, weights: TensorNode) -> TensorNode:
    """Multiply row ``b`` of ``x [B × n]`` by the scalar ``weights[b]`` (``weights [B]``)."""
    if x.data.ndim != 2 or weights.shape != (x.shape[0],):
        msg = f"scale_rows: weights of shape {weights.shape} do not match rows of {x.shape}"
        raise DimensionError(msg)
    w = weights.data[:, None]

    def _bw(g: np.ndarray) -> None:
        _accumulate(x, g * w)
        _accumulate(weights, np.sum(g * x.data, axis=1))

    return _result(x.data * w, (x, weights), _bw)


# ---------------------------------------------------------------------------
# Linear algebra and reductions
# ---------------------------------------------------------------------------


def matmul(a: TensorNode, b: TensorNode) -> TensorNode:
    """Matrix product ``a [..., m × k] · b [k × n]``.

    Leading axes of ``a`` are treated as a stack of independent matrices that
    all share ``b``, which is how one weight matrix is applied to every node of
    a minibatch.
    """
    if a.data.ndim < 2 or b.data.ndim != 2 or a.shape[-1] != b.shape[0]:
        msg = f"matmul: cannot multiply shapes {a.shape} and {b.shape}"
        raise DimensionError(msg)
    k, n = b.shape

    def _bw(g: np.ndarray) -> None:
        if a.requires_grad:
            _accumulate(a, g @ b.data.T)
        if b.requires_grad:
            _accumulate(b, a.data.reshape(-1, k).T @ g.reshape(-1, n))

    return _result(a.data @ b.data, (a, b), _bw)


def sum_all(x: TensorNode) -> TensorNode:
    """Sum every entry to a scalar."""

    def _bw(g: np.ndarray) -> None:
        _accumulate(x, np.full_like(x.data, float(g)))

    return _result(np.array(x.data.sum(), dtype=DTYPE), (x,), _bw)


def mean_all(x: TensorNode) -> TensorNode:
    return scale(sum_all(x), 1.0 / max(x.size, 1))


def weighted_sum(weights: TensorNode, values: TensorNode) -> TensorNode:
    """Convex-combination style reduction ``out[b] = Σ_n weights[b, n] · values[b, n]``.

    Args:
        weights: ``[B × N]``.
        values: ``[B × N × D]``.

    Returns:
        ``[B × D]``.
    """
    if weights.data.ndim != 2 or values.data.ndim != 3 or values.shape[:2] != weights.shape:
        msg = f"weighted_sum: weights {weights.shape} do not index values {values.shape}"
        raise DimensionError(msg)

    def _bw(g: np.ndarray) -> None:
        _accumulate(weights, np.einsum("bd,bnd->bn", g, values.data))
        _accumulate(values, np.einsum("bn,bd->bnd", weights.data, g))

    return _result(np.einsum("bn,bnd->bd", weights.data, values.data), (weights, values), _bw)


# ---------------------------------------------------------------------------
# Softmax family and losses
# ---------------------------------------------------------------------------


def softmax_rows(x: TensorNode) -> TensorNode:
    """Softmax along the last axis, computed after subtracting the row max."""
    if x.data.ndim == 0 or x.shape[-1] < 1:
        msg = f"softmax_rows: need at least one column, got shape {x.shape}"
        raise DimensionError(msg)
    _require_finite("softmax_rows", x.data)
    e = np.exp(x.data - x.data.max(axis=-1, keepdims=True))
    s = e / e.sum(axis=-1, keepdims=True)

    def _bw(g: np.ndarray) -> None:
        _accumulate(x, s * (g - np.sum(g * s, axis=-1, keepdims=True)))

    return _result(s, (x,), _bw)


def log_softmax_rows(x: TensorNode) -> TensorNode:
    """Log-softmax along the last axis via log-sum-exp."""
    _require_finite("log_softmax_rows", x.data)
    shifted = x.data - x.data.max(axis=-1, keepdims=True)
    logz = np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
    out = shifted - logz
    probs = np.exp(out)

    def _bw(g: np.ndarray) -> None:
        _accumulate(x, g - probs * g.sum(axis=-1, keepdims=True))

    return _result(out, (x,), _bw)


def bce_with_logits(logits: TensorNode, targets: np.ndarray) -> TensorNode:
    """Elementwise binary cross-entropy of ``sigmoid(logits)`` against 0/1 targets."""
    t = np.asarray(targets, dtype=DTYPE)
    if t.shape != logits.data.shape:
        msg = f"bce_with_logits: targets {t.shape} do not match logits {logits.shape}"
        raise DimensionError(msg)
    z = logits.data
    out = np.maximum(z, 0.0) - z * t + np.log1p(np.exp(-np.abs(z)))

    def _bw(g: np.ndarray) -> None:
        p = 0.5 * (1.0 + np.tanh(0.5 * z))
        _accumulate(logits, g * (p - t))

    return _result(out, (logits,), _bw)


# ---------------------------------------------------------------------------
# Indexing and layout
# ---------------------------------------------------------------------------


def gather_row(table: TensorNode, index: int) -> TensorNode:
    """Return row ``index`` of ``table [V × E]`` as a ``[1 × E]`` node."""
    return gather_rows(table, np.array([index]))


def gather_rows(table: TensorNode, indices: np.ndarray) -> TensorNode:
    """Embedding lookup: ``out[b] = table[indices[b]]`` with scatter-add backward."""
    idx = np.asarray(indices, dtype=np.int64).reshape(-1)
    if table.data.ndim != 2:
        msg = f"gather_rows: table must be 2-D, got shape {table.shape}"
        raise DimensionError(msg)
    vocab = table.shape[0]
    if idx.size and (idx.min() < 0 or idx.max() >= vocab):
        bad = int(idx[(idx < 0) | (idx >= vocab)][0])
        msg = f"gather_rows: index {bad} out of range for table with {vocab} rows"
        raise IndexLookupError(msg)

    def _bw(g: np.ndarray) -> None:
        acc = np.zeros_like(table.data)
        np.add.at(acc, idx, g)
        _accumulate(table, acc)

    return _result(table.data[idx].copy(), (table,), _bw)


def pick(x: TensorNode, indices: np.ndarray) -> TensorNode:
    """Select ``x[b, indices[b]]`` from ``x [B × V]``, giving ``[B]``."""
    idx = np.asarray(indices, dtype=np.int64).reshape(-1)
    if x.data.ndim != 2 or idx.shape[0] != x.shape[0]:
        msg = f"pick: {idx.shape[0]} indices for rows of {x.shape}"
        raise DimensionError(msg)
    if idx.size and (idx.min() < 0 or idx.max() >= x.shape[1]):
        msg = f"pick: index out of range for {x.shape[1]} columns"
        raise IndexLookupError(msg)
    rows = np.arange(idx.shape[0])

    def _bw(g: np.ndarray) -> None:
        acc = np.zeros_like(x.data)
        acc[rows, idx] = g
        _accumulate(x, acc)

    return _result(x.data[rows, idx].copy(), (x,), _bw)


def _normalize_axis(axis: int, ndim: int, op: str) -> int:
    if not -ndim <= axis < ndim:
        msg = f"{op}: axis {axis} out of range for {ndim}-D operands"
        raise DimensionError(msg)
    return axis % ndim


def concat(parts: Sequence[TensorNode], axis: int = -1) -> TensorNode:
    """Concatenate along ``axis``; empty parts are ignored."""
    if not parts:
        msg = "concat: no parts given"
        raise DimensionError(msg)
    kept = [p for p in parts if p.size > 0] or [parts[0]]
    ndim = kept[0].data.ndim
    ax = _normalize_axis(axis, ndim, "concat")
    ref = kept[0].shape
    for p in kept[1:]:
        if p.data.ndim != ndim or any(p.shape[i] != ref[i] for i in range(ndim) if i != ax):
            msg = f"concat: shapes {[q.shape for q in kept]} disagree off axis {ax}"
            raise DimensionError(msg)
    bounds = np.cumsum([0] + [p.shape[ax] for p in kept])

    def _bw(g: np.ndarray) -> None:
        for p, lo, hi in zip(kept, bounds[:-1], bounds[1:], strict=True):
            _accumulate(p, np.take(g, np.arange(lo, hi), axis=ax))

    return _result(np.concatenate([p.data for p in kept], axis=ax), tuple(kept), _bw)


def stack(parts: Sequence[TensorNode], axis: int = 0) -> TensorNode:
    """Stack equally shaped parts along a new axis."""
    if not parts:
        msg = "stack: no parts given"
        raise DimensionError(msg)
    for p in parts[1:]:
        _require_same_shape("stack", parts[0], p)
    ax = _normalize_axis(axis, parts[0].data.ndim + 1, "stack")

    def _bw(g: np.ndarray) -> None:
        for i, p in enumerate(parts):
            _accumulate(p, np.take(g, i, axis=ax))

    return _result(np.stack([p.data for p in parts], axis=ax), tuple(parts), _bw)


def slice_axis(x: TensorNode, start: int, stop: int, axis: int = -1) -> TensorNode:
    """Contiguous slice ``[start, stop)`` along ``axis``."""
    ax = _normalize_axis(axis, x.data.ndim, "slice_axis")
    if not 0 <= start < stop <= x.shape[ax]:
        msg = f"slice_axis: [{start}, {stop}) out of range for axis {ax} of shape {x.shape}"
        raise DimensionError(msg)
    index = [slice(None)] * x.data.ndim
    index[ax] = slice(start, stop)
    key = tuple(index)

    def _bw(g: np.ndarray) -> None:
        acc = np.zeros_like(x.data)
        acc[key] = g
        _accumulate(x, acc)

    return _result(x.data[key].copy(), (x,), _bw)


def select(x: TensorNode, index: int, axis: int = 0) -> TensorNode:
    """Take one position along ``axis``, dropping that axis."""
    ax = _normalize_axis(axis, x.data.ndim, "select")
    if not 0 <= index < x.shape[ax]:
        msg = f"select: index {index} out of range for axis {ax} of shape {x.shape}"
        raise IndexLookupError(msg)

    def _bw(g: np.ndarray) -> None:
        acc = np.zeros_like(x.data)
        key = [slice(None)] * x.data.ndim
        key[ax] = index
        acc[tuple(key)] = g
        _accumulate(x, acc)

    return _result(np.take(x.data, index, axis=ax).copy(), (x,), _bw)


def reshape(x: TensorNode, shape: Sequence[int]) -> TensorNode:
    new_shape = tuple(shape)
    if int(np.prod(new_shape)) != x.size:
        msg = f"reshape: cannot view shape {x.shape} as {new_shape}"
        raise DimensionError(msg)

    def _bw(g: np.ndarray) -> None:
        _accumulate(x, g.reshape(x.data.shape))

    return _result(x.data.reshape(new_shape).copy(), (x,), _bw)


def expand(x: TensorNode, count: int, axis: int) -> TensorNode:
    """Insert a new axis and repeat ``x`` ``count`` times along it."""
    ax = _normalize_axis(axis, x.data.ndim + 1, "expand")
    if count < 1:
        msg = f"expand: count must be positive, got {count}"
        raise DimensionError(msg)

    def _bw(g: np.ndarray) -> None:
        _accumulate(x, g.sum(axis=ax))

    return _result(np.repeat(np.expand_dims(x.data, ax), count, axis=ax), (x,), _bw)


# ---------------------------------------------------------------------------
# Stochastic
# ---------------------------------------------------------------------------


def dropout(x: TensorNode, keep_prob: float, rng: RngStream | None, *, training: bool) -> TensorNode:
    """Inverted dropout: keep each entry with probability ``keep_prob`` and rescale.

    Evaluation mode and ``keep_prob == 1`` return ``x`` itself.
    """
    if not 0.0 < keep_prob <= 1.0:
        msg = f"dropout: keep_prob must lie in (0, 1], got {keep_prob}"
        raise ConfigurationError(msg)
    if not training or keep_prob == 1.0:
        return x
    if rng is None:
        msg = "dropout in training mode needs an RngStream"
        raise ConfigurationError(msg)
    mask = rng.bernoulli(keep_prob, x.shape) / keep_prob

    def _bw(g: np.ndarray) -> None:
        _accumulate(x, g * mask)

    return _result(x.data * mask, (x,), _bw)
