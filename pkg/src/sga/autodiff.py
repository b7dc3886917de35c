"""Dense float64 tensors with reverse-mode gradients.

All computation in this package runs in 64-bit floats. A :class:`Tensor`
wraps a row-major numpy array and remembers the operation that produced it;
:func:`backward` walks that record once, in reverse topological order, and
accumulates gradients into the :class:`Parameter` leaves it reaches. The op
set is deliberately small: exactly the pieces the relation encoder and the
graph encoder are built from.

Tensors are immutable after construction and can be shared freely across
threads for reading. Gradient accumulation is single-writer: never run two
backward passes over the same parameter set concurrently.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

from .errors import NumericError, ShapeError, StateError

Array = np.ndarray


def _as_array(values) -> Array:
    return np.ascontiguousarray(np.asarray(values, dtype=np.float64))


class Tensor:
    """Row-major float64 value, recorded for reverse-mode differentiation."""

    __slots__ = ("data", "_parents", "_vjp", "_done")

    def __init__(self, values, validate: bool = True):
        data = _as_array(values)
        if validate and not np.all(np.isfinite(data)):
            raise NumericError("tensor values must be finite (no NaN/Inf)")
        self.data = data
        self._parents: tuple = ()
        self._vjp = None
        self._done = False

    @classmethod
    def _result(cls, data: Array, parents: tuple, vjp) -> "Tensor":
        # Internal constructor for op outputs; skips finiteness validation.
        out = object.__new__(Tensor)
        out.data = data
        out._parents = parents
        out._vjp = vjp
        out._done = False
        return out

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError(f"item() needs a scalar, got shape {self.shape}")
        return float(self.data.reshape(()))

    def __repr__(self):
        return f"Tensor(shape={self.shape})"

    # Arithmetic sugar. Scalar operands are folded in as constants.
    def __add__(self, other):
        return add(self, lift(other))

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, lift(other))

    def __rsub__(self, other):
        return sub(lift(other), self)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return scale(self, float(other))
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, (int, float)):
            raise ShapeError("tensor division is only supported by scalars")
        return div_scalar(self, float(other))

    def __neg__(self):
        return scale(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, lift(other))


class Parameter(Tensor):
    """Named trainable tensor with a persistent gradient accumulator."""

    __slots__ = ("name", "grad")

    def __init__(self, name: str, values):
        super().__init__(values)
        self.name = str(name)
        self.grad = np.zeros_like(self.data)

    def __repr__(self):
        return f"Parameter({self.name!r}, shape={self.shape})"

    def zero_grad(self):
        self.grad[...] = 0.0

    def assign(self, values):
        """Overwrite the value in place (optimizer steps, perturbations)."""
        arr = _as_array(values)
        if arr.shape != self.data.shape:
            raise ShapeError(
                f"cannot assign shape {arr.shape} to parameter "
                f"{self.name!r} of shape {self.data.shape}"
            )
        if not np.all(np.isfinite(arr)):
            raise NumericError(f"non-finite assignment to parameter {self.name!r}")
        np.copyto(self.data, arr)


def lift(value) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def zero_gradients(params: Iterable[Parameter]) -> None:
    for p in params:
        p.zero_grad()


# ---------------------------------------------------------------------------
# Primitive operations. Each returns a Tensor whose _vjp maps the incoming
# gradient to one gradient per parent, aligned with _parents.
# ---------------------------------------------------------------------------


def _unbroadcast(grad: Array, shape: tuple) -> Array:
    """Sum a gradient back down to the shape it was broadcast from."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def add(a: Tensor, b: Tensor) -> Tensor:
    a, b = lift(a), lift(b)
    data = a.data + b.data

    def vjp(g):
        return _unbroadcast(g, a.data.shape), _unbroadcast(g, b.data.shape)

    return Tensor._result(data, (a, b), vjp)


def sub(a: Tensor, b: Tensor) -> Tensor:
    a, b = lift(a), lift(b)
    data = a.data - b.data

    def vjp(g):
        return _unbroadcast(g, a.data.shape), _unbroadcast(-g, b.data.shape)

    return Tensor._result(data, (a, b), vjp)


def mul(a: Tensor, b: Tensor) -> Tensor:
    a, b = lift(a), lift(b)
    data = a.data * b.data

    def vjp(g):
        return (
            _unbroadcast(g * b.data, a.data.shape),
            _unbroadcast(g * a.data, b.data.shape),
        )

    return Tensor._result(data, (a, b), vjp)


def scale(t: Tensor, c: float) -> Tensor:
    t = lift(t)
    return Tensor._result(t.data * c, (t,), lambda g: (g * c,))


def div_scalar(t: Tensor, c: float) -> Tensor:
    t = lift(t)
    if c == 0.0:
        raise ValueError("division by zero")
    return Tensor._result(t.data / c, (t,), lambda g: (g / c,))


def add_scalar(t: Tensor, c: float) -> Tensor:
    t = lift(t)
    return Tensor._result(t.data + c, (t,), lambda g: (g,))


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product following numpy semantics for the shapes used here.

    Supported: (..., k) @ (k, m), (r, k) @ (k,), and (k,) @ (k,) dot.
    Anything else raises a ShapeError naming both shapes.
    """
    a, b = lift(a), lift(b)
    A, B = a.data, b.data

    def bad():
        return ShapeError(f"cannot matmul shapes {A.shape} and {B.shape}")

    if A.ndim >= 2 and B.ndim == 2:
        if A.shape[-1] != B.shape[0]:
            raise bad()
        data = A @ B

        def vjp(g):
            da = g @ B.T
            k, m = B.shape
            db = A.reshape(-1, k).T @ g.reshape(-1, m)
            return da, db

    elif A.ndim == 2 and B.ndim == 1:
        if A.shape[1] != B.shape[0]:
            raise bad()
        data = A @ B

        def vjp(g):
            return np.outer(g, B), A.T @ g

    elif A.ndim == 1 and B.ndim == 2:
        if A.shape[0] != B.shape[0]:
            raise bad()
        data = A @ B

        def vjp(g):
            return B @ g, np.outer(A, g)

    elif A.ndim == 1 and B.ndim == 1:
        if A.shape[0] != B.shape[0]:
            raise bad()
        data = np.asarray(A @ B)

        def vjp(g):
            return g * B, g * A

    else:
        raise bad()

    return Tensor._result(np.ascontiguousarray(data), (a, b), vjp)


def transpose(t: Tensor) -> Tensor:
    t = lift(t)
    if t.data.ndim != 2:
        raise ShapeError(f"transpose expects a matrix, got shape {t.shape}")
    return Tensor._result(
        np.ascontiguousarray(t.data.T), (t,), lambda g: (np.ascontiguousarray(g.T),)
    )


def tanh(t: Tensor) -> Tensor:
    t = lift(t)
    out = np.tanh(t.data)
    return Tensor._result(out, (t,), lambda g: (g * (1.0 - out * out),))


def sigmoid(t: Tensor) -> Tensor:
    t = lift(t)
    x = t.data
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return Tensor._result(out, (t,), lambda g: (g * out * (1.0 - out),))


def relu(t: Tensor) -> Tensor:
    t = lift(t)
    out = np.maximum(t.data, 0.0)
    return Tensor._result(out, (t,), lambda g: (g * (t.data > 0.0),))


def sum_all(t: Tensor) -> Tensor:
    t = lift(t)
    data = np.asarray(t.data.sum())
    return Tensor._result(data, (t,), lambda g: (np.broadcast_to(g, t.data.shape),))


def mean_all(t: Tensor) -> Tensor:
    t = lift(t)
    return div_scalar(sum_all(t), float(t.data.size))


def sum_last(t: Tensor) -> Tensor:
    t = lift(t)
    data = t.data.sum(axis=-1)

    def vjp(g):
        return (np.broadcast_to(g[..., None], t.data.shape),)

    return Tensor._result(np.ascontiguousarray(data), (t,), vjp)


def reshape(t: Tensor, shape: tuple) -> Tensor:
    t = lift(t)
    data = t.data.reshape(shape)

    def vjp(g):
        return (g.reshape(t.data.shape),)

    return Tensor._result(np.ascontiguousarray(data), (t,), vjp)


def concat_last(parts: Sequence[Tensor]) -> Tensor:
    parts = [lift(p) for p in parts]
    if not parts:
        raise ValueError("concat_last needs at least one tensor")
    data = np.concatenate([p.data for p in parts], axis=-1)
    widths = [p.data.shape[-1] for p in parts]

    def vjp(g):
        grads, start = [], 0
        for w in widths:
            grads.append(np.ascontiguousarray(g[..., start : start + w]))
            start += w
        return tuple(grads)

    return Tensor._result(data, tuple(parts), vjp)


def stack_rows(rows: Sequence[Tensor]) -> Tensor:
    """Stack 1-D tensors of equal length into a matrix (one per row)."""
    rows = [lift(r) for r in rows]
    if not rows:
        raise ValueError("stack_rows needs at least one tensor")
    for r in rows:
        if r.data.ndim != 1 or r.data.shape != rows[0].data.shape:
            raise ShapeError("stack_rows expects 1-D tensors of equal length")
    data = np.stack([r.data for r in rows], axis=0)

    def vjp(g):
        return tuple(np.ascontiguousarray(g[i]) for i in range(len(rows)))

    return Tensor._result(data, tuple(rows), vjp)


def slice_last(t: Tensor, start: int, stop: int) -> Tensor:
    t = lift(t)
    width = t.data.shape[-1]
    if not (0 <= start <= stop <= width):
        raise ShapeError(f"slice [{start}:{stop}] out of range for width {width}")
    data = np.ascontiguousarray(t.data[..., start:stop])

    def vjp(g):
        full = np.zeros_like(t.data)
        full[..., start:stop] = g
        return (full,)

    return Tensor._result(data, (t,), vjp)


def take_rows(t: Tensor, indices) -> Tensor:
    """Index the first axis with an integer array; gradient scatter-adds."""
    t = lift(t)
    idx = np.asarray(indices, dtype=np.int64)
    data = np.ascontiguousarray(t.data[idx])

    def vjp(g):
        full = np.zeros_like(t.data)
        np.add.at(full, idx, g)
        return (full,)

    return Tensor._result(data, (t,), vjp)


def softmax(t: Tensor) -> Tensor:
    """Softmax over the last axis, computed with max-subtraction.

    For a 1-D input this is the plain softmax of the vector; rows of a
    matrix are normalized independently. Rejects empty input.
    """
    t = lift(t)
    if t.data.size == 0 or t.data.shape[-1] == 0:
        raise ValueError("softmax of empty input")
    shifted = t.data - t.data.max(axis=-1, keepdims=True)
    ex = np.exp(shifted)
    out = ex / ex.sum(axis=-1, keepdims=True)

    def vjp(g):
        inner = (g * out).sum(axis=-1, keepdims=True)
        return (out * (g - inner),)

    return Tensor._result(out, (t,), vjp)


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-6) -> Tensor:
    """Normalize the last axis to zero mean / unit variance, then affine."""
    x, gain, bias = lift(x), lift(gain), lift(bias)
    d = x.data.shape[-1]
    if gain.data.shape != (d,) or bias.data.shape != (d,):
        raise ShapeError(
            f"layer_norm gain/bias must have shape ({d},), got "
            f"{gain.data.shape} and {bias.data.shape}"
        )
    mu = x.data.mean(axis=-1, keepdims=True)
    centered = x.data - mu
    var = (centered * centered).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = centered * inv
    out = gain.data * xhat + bias.data

    def vjp(g):
        dxhat = g * gain.data
        m1 = dxhat.mean(axis=-1, keepdims=True)
        m2 = (dxhat * xhat).mean(axis=-1, keepdims=True)
        dx = inv * (dxhat - m1 - xhat * m2)
        flat_g = g.reshape(-1, d)
        flat_xhat = xhat.reshape(-1, d)
        dgain = (flat_g * flat_xhat).sum(axis=0)
        dbias = flat_g.sum(axis=0)
        return dx, dgain, dbias

    return Tensor._result(out, (x, gain, bias), vjp)


# ---------------------------------------------------------------------------
# Reverse pass
# ---------------------------------------------------------------------------


def _topo_order(root: Tensor) -> list:
    order, seen, stack = [], set(), [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if id(parent) not in seen:
                stack.append((parent, False))
    return order


def backward(loss: Tensor) -> None:
    """Populate gradients of every Parameter that participated in `loss`.

    The graph recorded while computing `loss` is consumed: calling backward
    a second time on the same loss raises a StateError; recompute the loss
    to run another pass. Gradients accumulate into Parameter.grad, so zero
    them (zero_gradients) between independent passes.
    """
    if loss.data.size != 1:
        raise ShapeError(f"backward expects a scalar loss, got shape {loss.shape}")
    if loss._done:
        raise StateError(
            "backward was already called on this loss; rebuild the computation "
            "before differentiating again"
        )
    loss._done = True
    order = _topo_order(loss)
    grads: dict[int, Array] = {id(loss): np.ones_like(loss.data)}
    for node in reversed(order):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if isinstance(node, Parameter):
            node.grad += g.reshape(node.grad.shape)
            continue
        if node._vjp is None:
            continue
        for parent, pg in zip(node._parents, node._vjp(g)):
            key = id(parent)
            if key in grads:
                grads[key] = grads[key] + pg
            else:
                grads[key] = pg


# ---------------------------------------------------------------------------
# Initialization
# ---------------------------------------------------------------------------


def glorot_uniform(rng: np.random.Generator, rows: int, cols: int) -> Array:
    """uniform(-s, s) with s = sqrt(6 / (fan_in + fan_out))."""
    s = math.sqrt(6.0 / (rows + cols))
    return rng.uniform(-s, s, size=(rows, cols))
