"""Tape-based reverse-mode differentiation over dense 2-D arrays.

Every value is a 2-D :class:`Tensor`; scalars are 1x1.  Tensors created
while a :class:`Tape` is active get a node id on it.  Operations whose
inputs require gradients record a backward rule; :func:`backward` walks
the tape once in reverse and returns gradients for the leaves::

    with Tape() as tape:
        w = Tensor(w0, requires_grad=True)
        loss = ((x @ w) ** 2).sum()
    grads = backward(tape, loss)
    grads[w.node_id]

Only the primitives needed by the GCN encoder, MLP heads and the RGI loss
are provided.  Broadcasting is limited to adding/multiplying a 1 x m row
vector to an n x m matrix.
"""

from contextvars import ContextVar

import numpy as np

from .errors import BatchTooSmall, InvalidProbability, ShapeError, TapeConsumed

_active_tape = ContextVar("rgi_active_tape", default=None)
_relu_masks = ContextVar("rgi_relu_masks", default=None)

BN_EPS = 1e-5


class Tape:
    def __init__(self):
        self._parents = []
        self._rules = []
        self._needs_grad = []
        self._shapes = []
        self.consumed = False
        self._token = None

    def __enter__(self):
        self._token = _active_tape.set(self)
        return self

    def __exit__(self, *exc):
        _active_tape.reset(self._token)
        self._token = None

    def __len__(self):
        return len(self._parents)

    def _record(self, parents, rule, needs_grad, shape):
        if self.consumed:
            raise TapeConsumed("cannot record on a consumed tape")
        self._shapes.append(shape)
        self._parents.append(parents)
        self._rules.append(rule)
        self._needs_grad.append(needs_grad)
        return len(self._parents) - 1


def active_tape():
    return _active_tape.get()


class Tensor:
    __array_priority__ = 100

    def __init__(self, values, requires_grad=False, dtype=None):
        v = np.array(values, dtype=dtype if dtype is not None else None, copy=True)
        if v.dtype.kind not in "f":
            v = v.astype(np.float64)
        if v.ndim == 0:
            v = v.reshape(1, 1)
        elif v.ndim == 1:
            v = v.reshape(1, -1)
        elif v.ndim != 2:
            raise ShapeError(f"tensors are 2-D, got shape {v.shape}")
        self.values = v
        self.requires_grad = bool(requires_grad)
        self.tape = active_tape()
        self.node_id = None
        if self.tape is not None:
            self.node_id = self.tape._record((), None, self.requires_grad, v.shape)

    @classmethod
    def _result(cls, values, parents, rule):
        """Output of an operation; records ``rule`` only if some parent needs grad."""
        out = cls.__new__(cls)
        out.values = values
        out.tape = active_tape()
        out.node_id = None
        tracked = [p for p in parents if p.tape is out.tape and p.node_id is not None]
        out.requires_grad = out.tape is not None and any(
            out.tape._needs_grad[p.node_id] for p in tracked)
        if out.tape is not None:
            ids = tuple(p.node_id if p.tape is out.tape else None for p in parents)
            out.node_id = out.tape._record(ids, rule if out.requires_grad else None,
                                           out.requires_grad, values.shape)
        return out

    @property
    def shape(self):
        return self.values.shape

    @property
    def dtype(self):
        return self.values.dtype

    @property
    def T(self):
        return transpose(self)

    def item(self):
        if self.values.size != 1:
            raise ShapeError(f"item() needs a 1x1 tensor, got {self.shape}")
        return float(self.values[0, 0])

    def numpy(self):
        return self.values.copy()

    def sum(self):
        return sum_all(self)

    def __repr__(self):
        return f"Tensor(shape={self.shape}, node_id={self.node_id}, requires_grad={self.requires_grad})"

    def __add__(self, other):
        if np.isscalar(other):
            return add_scalar(self, other)
        return add(self, as_tensor(other, self.dtype))

    __radd__ = __add__

    def __sub__(self, other):
        if np.isscalar(other):
            return add_scalar(self, -other)
        return add(self, scale(as_tensor(other, self.dtype), -1.0))

    def __rsub__(self, other):
        if np.isscalar(other):
            return add_scalar(scale(self, -1.0), other)
        return as_tensor(other, self.dtype) - self

    def __neg__(self):
        return scale(self, -1.0)

    def __mul__(self, other):
        if np.isscalar(other):
            return scale(self, other)
        return mul(self, as_tensor(other, self.dtype))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not np.isscalar(other):
            return NotImplemented
        return scale(self, 1.0 / other)

    def __pow__(self, power):
        if power != 2:
            return NotImplemented
        return square(self)

    def __matmul__(self, other):
        return matmul(self, as_tensor(other, self.dtype))

    def __rmatmul__(self, other):
        return matmul(as_tensor(other, self.dtype), self)


def as_tensor(x, dtype=None):
    if isinstance(x, Tensor):
        return x
    return Tensor(x, dtype=dtype)


# ---------------------------------------------------------------- primitives


def matmul(a, b):
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul inner dims differ: {a.shape} @ {b.shape}")
    av, bv = a.values, b.values

    def rule(g):
        return g @ bv.T, av.T @ g

    return Tensor._result(av @ bv, (a, b), rule)


def _broadcast_row(a, b):
    if a.shape == b.shape:
        return False
    if b.shape == (1, a.shape[1]):
        return True
    raise ShapeError(f"incompatible shapes {a.shape} and {b.shape}")


def add(a, b):
    """Elementwise sum; ``b`` may be a 1 x m row broadcast over rows."""
    row = _broadcast_row(a, b)

    def rule(g):
        return g, (g.sum(axis=0, keepdims=True) if row else g)

    return Tensor._result(a.values + b.values, (a, b), rule)


def mul(a, b):
    """Elementwise product; ``b`` may be a 1 x m row broadcast over rows."""
    row = _broadcast_row(a, b)
    av, bv = a.values, b.values

    def rule(g):
        gb = g * av
        return g * bv, (gb.sum(axis=0, keepdims=True) if row else gb)

    return Tensor._result(av * bv, (a, b), rule)


def scale(a, c):
    c = float(c)
    return Tensor._result(a.values * a.dtype.type(c), (a,), lambda g: (g * c,))


def add_scalar(a, c):
    return Tensor._result(a.values + a.dtype.type(c), (a,), lambda g: (g,))


def multiply_constant(a, mask):
    """Multiply by a fixed array (no gradient to the array)."""
    mask = np.asarray(mask, dtype=a.dtype)
    if mask.shape != a.shape:
        raise ShapeError(f"mask shape {mask.shape} != {a.shape}")
    return Tensor._result(a.values * mask, (a,), lambda g: (g * mask,))


def transpose(a):
    return Tensor._result(a.values.T.copy(), (a,), lambda g: (g.T,))


def square(a):
    av = a.values
    return Tensor._result(av * av, (a,), lambda g: (2.0 * av * g,))


def sum_all(a):
    shape = a.shape
    total = np.full((1, 1), a.values.sum(), dtype=a.dtype)
    return Tensor._result(total, (a,), lambda g: (np.full(shape, g[0, 0], dtype=g.dtype),))


def diagonal(a):
    """Diagonal of a square matrix as a 1 x n row."""
    if a.shape[0] != a.shape[1]:
        raise ShapeError(f"diagonal needs a square matrix, got {a.shape}")
    n = a.shape[0]

    def rule(g):
        out = np.zeros((n, n), dtype=g.dtype)
        out[np.diag_indices(n)] = g[0]
        return (out,)

    return Tensor._result(np.diag(a.values).reshape(1, n).copy(), (a,), rule)


def center_columns(a):
    """Subtract each column's mean."""
    def rule(g):
        return (g - g.mean(axis=0, keepdims=True),)

    return Tensor._result(a.values - a.values.mean(axis=0, keepdims=True), (a,), rule)


def _relu_backward(x, g):
    return g * (x > 0)


def relu(a):
    av = a.values
    seen = _relu_masks.get()
    if seen is not None:
        seen.append(av > 0)
    return Tensor._result(np.maximum(av, 0), (a,), lambda g: (_relu_backward(av, g),))


def _standardize_backward(xhat, inv_std, dxhat, axis):
    """Gradient through ``(x - mean) * inv_std`` with statistics taken along ``axis``."""
    n = xhat.shape[axis]
    return inv_std / n * (n * dxhat - dxhat.sum(axis=axis, keepdims=True)
                          - xhat * (dxhat * xhat).sum(axis=axis, keepdims=True))


def _normalize(a, gamma, beta, eps, axis):
    x = a.values
    mu = x.mean(axis=axis, keepdims=True)
    var = ((x - mu) ** 2).mean(axis=axis, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = (x - mu) * inv_std
    gv = gamma.values

    def rule(g):
        dxhat = g * gv
        return (_standardize_backward(xhat, inv_std, dxhat, axis),
                (g * xhat).sum(axis=0, keepdims=True),
                g.sum(axis=0, keepdims=True))

    return Tensor._result(xhat * gv + beta.values, (a, gamma, beta), rule)


def _check_affine(a, gamma, beta):
    d = a.shape[1]
    if gamma.shape != (1, d) or beta.shape != (1, d):
        raise ShapeError(f"affine params must be 1x{d}, got {gamma.shape}, {beta.shape}")


def batch_norm(a, gamma, beta, eps=BN_EPS):
    """Column-wise standardization with the batch's biased variance, then affine."""
    if a.shape[0] < 2:
        raise BatchTooSmall(f"batch norm needs at least 2 rows, got {a.shape[0]}")
    _check_affine(a, gamma, beta)
    return _normalize(a, gamma, beta, eps, axis=0)


def layer_norm(a, gamma, beta, eps=BN_EPS):
    """Row-wise standardization, then per-column affine."""
    _check_affine(a, gamma, beta)
    return _normalize(a, gamma, beta, eps, axis=1)


def dropout(a, p, rng, training=True):
    """Inverted dropout; identity when ``p == 0`` or not training."""
    if not 0.0 <= p < 1.0:
        raise InvalidProbability(f"dropout probability must be in [0, 1), got {p}")
    if not training or p == 0.0:
        return a
    keep = rng.uniform(a.shape) >= p
    mask = keep.astype(a.dtype) / a.dtype.type(1.0 - p)
    return multiply_constant(a, mask)


def sparse_matmul(op, x):
    """``op @ x`` for a graph operator; backward uses ``op.T``."""
    from .graph import spmm

    return Tensor._result(spmm(op, x.values), (x,), lambda g: (spmm(op.T, g),))


class relu_masks:
    """Collect the activation pattern of every relu evaluated in the block."""

    def __enter__(self):
        self.masks = []
        self._token = _relu_masks.set(self.masks)
        return self.masks

    def __exit__(self, *exc):
        _relu_masks.reset(self._token)


# ------------------------------------------------------------------ backward


def backward(tape, loss):
    """Accumulate gradients of the 1x1 ``loss`` into every grad-requiring leaf.

    Returns ``{node_id: ndarray}``.  The tape is consumed.
    """
    if tape.consumed:
        raise TapeConsumed("tape already consumed by a previous backward")
    if loss.shape != (1, 1):
        raise ShapeError(f"loss must be 1x1, got {loss.shape}")
    if loss.tape is not tape or loss.node_id is None:
        raise ValueError("loss was not recorded on this tape")

    n = len(tape)
    grads = [None] * n
    grads[loss.node_id] = np.ones((1, 1), dtype=loss.dtype)
    for k in range(loss.node_id, -1, -1):
        g = grads[k]
        rule = tape._rules[k]
        if g is None or rule is None:
            continue
        parent_grads = rule(g)
        for pid, pg in zip(tape._parents[k], parent_grads):
            if pid is None or not tape._needs_grad[pid]:
                continue
            grads[pid] = pg if grads[pid] is None else grads[pid] + pg
        if tape._parents[k]:
            grads[k] = None

    result = {}
    for k in range(n):
        if not tape._parents[k] and tape._needs_grad[k]:
            result[k] = grads[k] if grads[k] is not None else np.zeros(tape._shapes[k], loss.dtype)
    tape.consumed = True
    tape._rules = [None] * n
    return result
