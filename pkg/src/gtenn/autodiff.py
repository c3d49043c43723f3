"""Dense 2-D matrices with tape-based reverse-mode differentiation.

Every value is a :class:`Matrix` wrapping a read-only float64 array. Ops
executed while a :class:`Tape` is active, and touching at least one tracked
input, append a backward closure to the tape. ``Tape.gradients`` replays the
closures in exact reverse order of recording.

    >>> w = Parameter([[2.0]])
    >>> with Tape() as tape:
    ...     loss = (w * w).sum()
    >>> tape.gradients(loss, [w])[0]
    array([[4.]])
"""

from __future__ import annotations

from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import sparse
from scipy.special import expit

from .errors import NumericError, ShapeError

_ACTIVE_TAPES: list["Tape"] = []

LEAKY_SLOPE = 0.01


def _as_array(data) -> np.ndarray:
    arr = np.array(data, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(1, -1)
    elif arr.ndim != 2:
        raise ShapeError(f"matrices are 2-D, got array with shape {arr.shape}")
    return arr


class Matrix:
    """Immutable dense real matrix. 1-D input becomes a single row."""

    __slots__ = ("_value", "_tracked", "name")
    __array_priority__ = 100  # let ndarray <op> Matrix defer to Matrix

    def __init__(self, data, name: str | None = None):
        arr = _as_array(data)
        arr.setflags(write=False)
        self._value = arr
        self._tracked = False
        self.name = name

    @classmethod
    def _wrap(cls, arr: np.ndarray) -> "Matrix":
        out = Matrix.__new__(Matrix)
        arr.setflags(write=False)
        out._value = arr
        out._tracked = False
        out.name = None
        return out

    @property
    def value(self) -> np.ndarray:
        return self._value

    @property
    def shape(self) -> tuple[int, int]:
        return self._value.shape

    @property
    def rows(self) -> int:
        return self._value.shape[0]

    @property
    def cols(self) -> int:
        return self._value.shape[1]

    @property
    def T(self) -> "Matrix":
        return transpose(self)

    def item(self) -> float:
        if self.shape != (1, 1):
            raise ShapeError(f"item() needs a 1x1 matrix, got {self.shape}")
        return float(self._value[0, 0])

    def numpy(self) -> np.ndarray:
        return self._value.copy()

    def sum(self, axis: int | None = None) -> "Matrix":
        return sum_(self, axis)

    def __repr__(self) -> str:
        label = f" {self.name!r}" if self.name else ""
        return f"Matrix{label}({self._value.tolist()})"

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __rmatmul__(self, other):
        return matmul(other, self)


class Parameter(Matrix):
    """A learnable matrix. Its value may be replaced wholesale via :meth:`assign`."""

    __slots__ = ()

    def __init__(self, data, name: str | None = None):
        super().__init__(data, name=name)
        self._tracked = True

    def assign(self, data) -> None:
        arr = _as_array(data)
        if arr.shape != self._value.shape:
            raise ShapeError(
                f"cannot assign shape {arr.shape} to parameter of shape {self._value.shape}"
            )
        arr.setflags(write=False)
        self._value = arr


class Tape:
    """Ordered record of differentiable ops; use as a context manager."""

    def __init__(self):
        self.ops: list[tuple[Matrix, tuple[Matrix, ...], Callable]] = []

    def __enter__(self) -> "Tape":
        _ACTIVE_TAPES.append(self)
        return self

    def __exit__(self, *exc) -> None:
        popped = _ACTIVE_TAPES.pop()
        assert popped is self, "tapes must be closed in LIFO order"

    def __len__(self) -> int:
        return len(self.ops)

    def gradients(self, loss: Matrix, params: Sequence[Matrix]) -> list[np.ndarray]:
        """Gradients of a 1x1 ``loss`` with respect to each of ``params``.

        Parameters the loss does not depend on get an all-zero gradient.
        """
        if loss.shape != (1, 1):
            raise ShapeError(f"loss must be 1x1, got {loss.shape}")
        grads: dict[int, np.ndarray] = {id(loss): np.ones((1, 1))}
        for out, inputs, backward in reversed(self.ops):
            g = grads.pop(id(out), None)
            if g is None:
                continue
            for inp, contrib in zip(inputs, backward(g)):
                if contrib is None or not inp._tracked:
                    continue
                key = id(inp)
                if key in grads:
                    grads[key] = grads[key] + contrib
                else:
                    grads[key] = contrib
        return [grads.get(id(p), np.zeros(p.shape)) for p in params]


def _record(value: np.ndarray, inputs: tuple[Matrix, ...], backward: Callable) -> Matrix:
    out = Matrix._wrap(value)
    if _ACTIVE_TAPES and any(m._tracked for m in inputs):
        out._tracked = True
        _ACTIVE_TAPES[-1].ops.append((out, inputs, backward))
    return out


def _lift(x) -> Matrix:
    return x if isinstance(x, Matrix) else Matrix(x)


def _unbroadcast(grad: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    if grad.shape == shape:
        return grad
    axes = tuple(i for i in range(2) if shape[i] == 1 and grad.shape[i] != 1)
    return grad.sum(axis=axes, keepdims=True)


def _broadcast_shape(a: Matrix, b: Matrix, opname: str) -> None:
    for da, db in zip(a.shape, b.shape):
        if da != db and da != 1 and db != 1:
            raise ShapeError(f"{opname}: cannot broadcast shapes {a.shape} and {b.shape}")


def matmul(a, b) -> Matrix:
    a, b = _lift(a), _lift(b)
    if a.cols != b.rows:
        raise ShapeError(f"matmul: shapes {a.shape} and {b.shape} are not aligned")
    av, bv = a.value, b.value
    return _record(av @ bv, (a, b), lambda g: (g @ bv.T, av.T @ g))


def add(a, b) -> Matrix:
    a, b = _lift(a), _lift(b)
    _broadcast_shape(a, b, "add")
    sa, sb = a.shape, b.shape
    return _record(a.value + b.value, (a, b), lambda g: (_unbroadcast(g, sa), _unbroadcast(g, sb)))


def sub(a, b) -> Matrix:
    a, b = _lift(a), _lift(b)
    _broadcast_shape(a, b, "sub")
    sa, sb = a.shape, b.shape
    return _record(a.value - b.value, (a, b), lambda g: (_unbroadcast(g, sa), -_unbroadcast(g, sb)))


def mul(a, b) -> Matrix:
    """Elementwise (Hadamard) product with row/column broadcasting."""
    a, b = _lift(a), _lift(b)
    _broadcast_shape(a, b, "mul")
    av, bv = a.value, b.value
    return _record(
        av * bv,
        (a, b),
        lambda g: (_unbroadcast(g * bv, av.shape), _unbroadcast(g * av, bv.shape)),
    )


def transpose(x: Matrix) -> Matrix:
    return _record(x.value.T.copy(), (x,), lambda g: (g.T,))


def leaky_relu(x: Matrix, slope: float = LEAKY_SLOPE) -> Matrix:
    """``max(x, slope*x)``; the derivative at exactly 0 is taken as ``slope``."""
    if not 0.0 < slope < 1.0:
        raise ValueError(f"leaky_relu slope must lie in (0, 1), got {slope}")
    xv = x.value
    deriv = np.where(xv > 0, 1.0, slope)
    return _record(xv * deriv, (x,), lambda g: (g * deriv,))


def relu(x: Matrix) -> Matrix:
    """``max(x, 0)``, the hinge ``[x]_+``. Zero derivative at 0."""
    mask = (x.value > 0).astype(np.float64)
    return _record(x.value * mask, (x,), lambda g: (g * mask,))


def sigmoid(x: Matrix) -> Matrix:
    s = expit(x.value)
    return _record(s, (x,), lambda g: (g * s * (1.0 - s),))


def tanh(x: Matrix) -> Matrix:
    t = np.tanh(x.value)
    return _record(t, (x,), lambda g: (g * (1.0 - t * t),))


def sum_(x: Matrix, axis: int | None = None) -> Matrix:
    """Sum of all entries (1x1) or along ``axis`` keeping the result 2-D."""
    shape = x.shape
    if axis is None:
        out = np.array([[x.value.sum()]])
    else:
        out = x.value.sum(axis=axis, keepdims=True)
    return _record(out, (x,), lambda g: (np.broadcast_to(g, shape).copy(),))


def mean(x: Matrix) -> Matrix:
    count = x.value.size
    return mul(sum_(x), 1.0 / count) if count else Matrix(0.0)


def _scatter_rows(idx: np.ndarray, g: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    rows, cols = shape
    flat = (idx[:, None] * cols + np.arange(cols)[None, :]).reshape(-1)
    return np.bincount(flat, weights=g.reshape(-1), minlength=rows * cols).reshape(shape)


def gather_rows(x: Matrix, index) -> Matrix:
    """Rows of ``x`` picked by integer ``index`` (repeats allowed)."""
    idx = np.asarray(index, dtype=np.int64).reshape(-1)
    shape = x.shape
    return _record(x.value[idx], (x,), lambda g: (_scatter_rows(idx, g, shape),))


def pair_sq_dists(x: Matrix, left, right) -> Matrix:
    """Column of ``|x[left[k]] - x[right[k]]|^2`` for each k."""
    li = np.asarray(left, dtype=np.int64).reshape(-1)
    ri = np.asarray(right, dtype=np.int64).reshape(-1)
    if li.shape != ri.shape:
        raise ShapeError(f"pair_sq_dists: index lengths {li.shape} and {ri.shape} differ")
    shape = x.shape
    diff = x.value[li] - x.value[ri]
    out = np.einsum("ij,ij->i", diff, diff)[:, None]

    def backward(g):
        # d/dx sum_k g_k |x_l - x_r|^2 = 2 M x, M = sum_k g_k (e_l - e_r)(e_l - e_r)^T
        w = 2.0 * g[:, 0]
        lap = sparse.csr_matrix(
            (np.concatenate([w, -w, -w, w]), (np.concatenate([li, li, ri, ri]), np.concatenate([li, ri, li, ri]))),
            shape=(shape[0], shape[0]),
        )
        return (lap @ x.value,)

    return _record(out, (x,), backward)


def reshape(x: Matrix, rows: int, cols: int) -> Matrix:
    shape = x.shape
    if rows * cols != x.value.size:
        raise ShapeError(f"reshape: cannot view shape {shape} as ({rows}, {cols})")
    return _record(x.value.reshape(rows, cols).copy(), (x,), lambda g: (g.reshape(shape),))


def pad_rows(x: Matrix, total: int) -> Matrix:
    """Append zero rows so the result has ``total`` rows."""
    n = x.rows
    if total < n:
        raise ShapeError(f"pad_rows: target {total} rows is smaller than {x.shape}")
    out = np.zeros((total, x.cols))
    out[:n] = x.value
    return _record(out, (x,), lambda g: (g[:n].copy(),))


def grad_check(
    f: Callable[[], Matrix], params: Iterable[Parameter], eps: float = 1e-5
) -> float:
    """Largest relative disagreement between tape gradients and central differences.

    ``f`` is re-evaluated at perturbed parameter values, so it must read the
    parameters afresh on every call and be deterministic. The error for one
    entry is ``|analytic - numeric| / (|numeric| + eps)``.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    params = list(params)

    def evaluate() -> float:
        val = f().item()
        if not np.isfinite(val):
            raise NumericError(f"grad_check: objective evaluated to {val}")
        return val

    with Tape() as tape:
        loss = f()
    if not np.isfinite(loss.item()):
        raise NumericError(f"grad_check: objective evaluated to {loss.item()}")
    analytic = tape.gradients(loss, params)

    worst = 0.0
    for p, ga in zip(params, analytic):
        base = p.numpy()
        try:
            for pos in np.ndindex(base.shape):
                bumped = base.copy()
                bumped[pos] = base[pos] + eps
                p.assign(bumped)
                up = evaluate()
                bumped[pos] = base[pos] - eps
                p.assign(bumped)
                down = evaluate()
                numeric = (up - down) / (2.0 * eps)
                err = abs(ga[pos] - numeric) / (abs(numeric) + eps)
                worst = max(worst, err)
        finally:
            p.assign(base)
    return worst


def check_finite(x: Matrix, what: str = "value") -> Matrix:
    if not np.all(np.isfinite(x.value)):
        raise NumericError(f"non-finite entries in {what}")
    return x
