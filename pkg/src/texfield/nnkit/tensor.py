"""Reverse-mode autodiff core: a numpy-backed Tensor with a recorded graph.

Each op closes over its inputs and appends gradient contributions into
`Tensor.grad` during `backward()`. The graph is walked once per backward in
reverse topological order, so a forward pass acts as its own tape.
"""

from __future__ import annotations

import numpy as np

__all__ = ["Tensor", "concat", "gather_rows", "stack_rows", "scatter_add_rows"]


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum `grad` down to `shape`, undoing numpy broadcasting."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


def scatter_add_rows(values: np.ndarray, idx: np.ndarray, n_rows: int) -> np.ndarray:
    """Sum `values[i]` into row `idx[i]` of a zero array with `n_rows` rows.

    Sort + reduceat instead of np.add.at: orders of magnitude faster for the
    decode-query gathers where indices repeat heavily.
    """
    out = np.zeros((n_rows,) + values.shape[1:], dtype=values.dtype)
    if len(idx) == 0:
        return out
    order = np.argsort(idx, kind="stable")
    sorted_vals = values[order]
    sorted_idx = idx[order]
    uniq, starts = np.unique(sorted_idx, return_index=True)
    out[uniq] = np.add.reduceat(sorted_vals, starts, axis=0)
    return out


class Tensor:
    """A value in the computation graph.

    `data` is always a numpy array (64-bit in tests, 32-bit in training by
    config). Gradients accumulate in `grad` with the same shape and dtype.
    """

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False, dtype=None):
        arr = np.asarray(data)
        if dtype is not None:
            arr = arr.astype(dtype, copy=False)
        elif not np.issubdtype(arr.dtype, np.floating):
            arr = arr.astype(np.float64)
        self.data = arr
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self._parents = ()
        self._backward = None

    # -- graph plumbing ----------------------------------------------------

    @classmethod
    def _from_op(cls, data: np.ndarray, parents: tuple, backward) -> "Tensor":
        out = cls(data)
        out.requires_grad = any(p.requires_grad for p in parents)
        if out.requires_grad:
            out._parents = parents
            out._backward = backward
        return out

    def _accumulate(self, grad: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += grad

    def backward(self, grad=None) -> None:
        """Reverse-mode sweep from this node. Defaults to d(self)/d(self)=1."""
        if grad is None:
            if self.data.size != 1:
                raise ValueError("backward() without grad requires a scalar output")
            grad = np.ones_like(self.data)
        topo: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if p.requires_grad and id(p) not in seen:
                    stack.append((p, False))
        self._accumulate(np.asarray(grad, dtype=self.data.dtype))
        for node in reversed(topo):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    def zero_grad(self) -> None:
        self.grad = None

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    # -- shape info ---------------------------------------------------------

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def dtype(self):
        return self.data.dtype

    def item(self) -> float:
        return float(self.data.reshape(()))

    def __len__(self):
        return len(self.data)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype}, grad={self.requires_grad})"

    # -- arithmetic ----------------------------------------------------------

    @staticmethod
    def _coerce(other, like: "Tensor") -> "Tensor":
        if isinstance(other, Tensor):
            return other
        return Tensor(np.asarray(other, dtype=like.data.dtype))

    def __add__(self, other):
        other = self._coerce(other, self)
        a, b = self, other
        out = Tensor._from_op(a.data + b.data, (a, b), None)
        if out.requires_grad:
            def bwd(g):
                if a.requires_grad:
                    a._accumulate(_unbroadcast(g, a.data.shape))
                if b.requires_grad:
                    b._accumulate(_unbroadcast(g, b.data.shape))
            out._backward = bwd
        return out

    __radd__ = __add__

    def __neg__(self):
        a = self
        out = Tensor._from_op(-a.data, (a,), None)
        if out.requires_grad:
            out._backward = lambda g: a._accumulate(-g)
        return out

    def __sub__(self, other):
        return self + (-self._coerce(other, self))

    def __rsub__(self, other):
        return self._coerce(other, self) + (-self)

    def __mul__(self, other):
        other = self._coerce(other, self)
        a, b = self, other
        out = Tensor._from_op(a.data * b.data, (a, b), None)
        if out.requires_grad:
            def bwd(g):
                if a.requires_grad:
                    a._accumulate(_unbroadcast(g * b.data, a.data.shape))
                if b.requires_grad:
                    b._accumulate(_unbroadcast(g * a.data, b.data.shape))
            out._backward = bwd
        return out

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other, self)
        a, b = self, other
        out = Tensor._from_op(a.data / b.data, (a, b), None)
        if out.requires_grad:
            def bwd(g):
                if a.requires_grad:
                    a._accumulate(_unbroadcast(g / b.data, a.data.shape))
                if b.requires_grad:
                    b._accumulate(_unbroadcast(-g * a.data / (b.data * b.data), b.data.shape))
            out._backward = bwd
        return out

    def __rtruediv__(self, other):
        return self._coerce(other, self) / self

    def __matmul__(self, other):
        other = self._coerce(other, self)
        a, b = self, other
        out = Tensor._from_op(a.data @ b.data, (a, b), None)
        if out.requires_grad:
            def bwd(g):
                if a.requires_grad:
                    a._accumulate(_unbroadcast(g @ np.swapaxes(b.data, -1, -2), a.data.shape))
                if b.requires_grad:
                    b._accumulate(_unbroadcast(np.swapaxes(a.data, -1, -2) @ g, b.data.shape))
            out._backward = bwd
        return out

    def __pow__(self, p):
        if not isinstance(p, (int, float)):
            raise TypeError("only scalar exponents are supported")
        a = self
        out = Tensor._from_op(a.data ** p, (a,), None)
        if out.requires_grad:
            out._backward = lambda g: a._accumulate(g * p * a.data ** (p - 1))
        return out

    def __getitem__(self, key):
        a = self
        out = Tensor._from_op(a.data[key], (a,), None)
        if out.requires_grad:
            def bwd(g):
                full = np.zeros_like(a.data)
                full[key] = g
                a._accumulate(full)
            out._backward = bwd
        return out

    # -- reductions and shape ops ---------------------------------------------

    def sum(self, axis=None, keepdims=False):
        a = self
        out = Tensor._from_op(a.data.sum(axis=axis, keepdims=keepdims), (a,), None)
        if out.requires_grad:
            def bwd(g):
                if axis is not None and not keepdims:
                    axes = axis if isinstance(axis, tuple) else (axis,)
                    g = np.expand_dims(g, axes)
                a._accumulate(np.broadcast_to(g, a.data.shape).copy())
            out._backward = bwd
        return out

    def mean(self, axis=None, keepdims=False):
        n = self.data.size if axis is None else np.prod(
            [self.data.shape[ax] for ax in (axis if isinstance(axis, tuple) else (axis,))]
        )
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / float(n))

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        a = self
        out = Tensor._from_op(a.data.reshape(shape), (a,), None)
        if out.requires_grad:
            out._backward = lambda g: a._accumulate(g.reshape(a.data.shape))
        return out

    def transpose(self, axes):
        a = self
        out = Tensor._from_op(a.data.transpose(axes), (a,), None)
        if out.requires_grad:
            inv = tuple(np.argsort(axes))
            out._backward = lambda g: a._accumulate(g.transpose(inv))
        return out

    # -- elementwise nonlinearities --------------------------------------------

    def exp(self):
        a = self
        data = np.exp(a.data)
        out = Tensor._from_op(data, (a,), None)
        if out.requires_grad:
            out._backward = lambda g: a._accumulate(g * data)
        return out

    def log(self):
        a = self
        out = Tensor._from_op(np.log(a.data), (a,), None)
        if out.requires_grad:
            out._backward = lambda g: a._accumulate(g / a.data)
        return out

    def tanh(self):
        a = self
        data = np.tanh(a.data)
        out = Tensor._from_op(data, (a,), None)
        if out.requires_grad:
            out._backward = lambda g: a._accumulate(g * (1.0 - data * data))
        return out

    def sigmoid(self):
        a = self
        data = 1.0 / (1.0 + np.exp(-np.clip(a.data, -60.0, 60.0)))
        out = Tensor._from_op(data, (a,), None)
        if out.requires_grad:
            out._backward = lambda g: a._accumulate(g * data * (1.0 - data))
        return out

    def relu(self):
        a = self
        out = Tensor._from_op(np.maximum(a.data, 0.0), (a,), None)
        if out.requires_grad:
            mask = a.data > 0.0
            out._backward = lambda g: a._accumulate(g * mask)
        return out

    def abs(self):
        a = self
        out = Tensor._from_op(np.abs(a.data), (a,), None)
        if out.requires_grad:
            sign = np.sign(a.data)
            out._backward = lambda g: a._accumulate(g * sign)
        return out

    def sqrt(self):
        a = self
        data = np.sqrt(a.data)
        out = Tensor._from_op(data, (a,), None)
        if out.requires_grad:
            out._backward = lambda g: a._accumulate(g * 0.5 / data)
        return out

    def clip(self, lo: float, hi: float):
        """Hard clamp; gradient is exact (zero outside the open interval)."""
        a = self
        out = Tensor._from_op(np.clip(a.data, lo, hi), (a,), None)
        if out.requires_grad:
            mask = (a.data >= lo) & (a.data <= hi)
            out._backward = lambda g: a._accumulate(g * mask)
        return out


def concat(tensors, axis: int = 0) -> Tensor:
    parents = tuple(tensors)
    out = Tensor._from_op(np.concatenate([t.data for t in parents], axis=axis), parents, None)
    if out.requires_grad:
        sizes = [t.data.shape[axis] for t in parents]
        splits = np.cumsum(sizes)[:-1]

        def bwd(g):
            for t, piece in zip(parents, np.split(g, splits, axis=axis)):
                if t.requires_grad:
                    t._accumulate(piece)
        out._backward = bwd
    return out


def gather_rows(x: Tensor, idx: np.ndarray) -> Tensor:
    """Select rows `x[idx]` along axis 0; backward scatter-adds duplicates."""
    idx = np.asarray(idx, dtype=np.int64)
    a = x
    out = Tensor._from_op(a.data[idx], (a,), None)
    if out.requires_grad:
        out._backward = lambda g: a._accumulate(scatter_add_rows(g, idx, a.data.shape[0]))
    return out


def stack_rows(tensors) -> Tensor:
    """Stack 1-D or k-D tensors along a new leading axis."""
    parents = tuple(tensors)
    out = Tensor._from_op(np.stack([t.data for t in parents], axis=0), parents, None)
    if out.requires_grad:
        def bwd(g):
            for i, t in enumerate(parents):
                if t.requires_grad:
                    t._accumulate(g[i])
        out._backward = bwd
    return out
