"""Dense float64 tensors with reverse-mode autodiff on a per-forward tape.

Every op records a backward closure on its output, so building a scalar
loss and calling ``loss.backward()`` accumulates into the ``grad`` slot of
each reachable tensor that requires one. A recorded graph supports exactly
one backward pass; rebuild the forward computation before differentiating
again. Tapes are not thread-safe; distinct models on distinct threads are
fine as long as no tensors are shared.

All math stays in 64-bit so finite-difference checks are meaningful.
"""

from __future__ import annotations

import math

import numpy as np

# Clamp inside log() so degenerate distributions never produce NaN.
LOG_EPS = 1e-12

_GELU_C = math.sqrt(2.0 / math.pi)

_grad_enabled = True


class no_grad:
    """Context manager that disables tape recording (inference paths)."""

    def __enter__(self):
        global _grad_enabled
        self._prev = _grad_enabled
        _grad_enabled = False
        return self

    def __exit__(self, *exc):
        global _grad_enabled
        _grad_enabled = self._prev
        return False


class Tensor:
    """An n-d float64 array plus a gradient slot."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "_done")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = requires_grad
        self._parents: tuple = ()
        self._backward = None
        self._done = False

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def item(self) -> float:
        return float(self.data)

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def zero_grad(self):
        if self.grad is not None:
            self.grad[...] = 0.0

    def backward(self):
        """Reverse-mode pass from a scalar; fills grads of reachable tensors."""
        if self.data.size != 1:
            raise ValueError(f"backward requires a scalar, got shape {self.shape}")
        if self._done:
            raise RuntimeError(
                "backward already called on this graph; rebuild the forward pass"
            )
        topo = _toposort(self)
        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._backward is not None:
                node._backward()
            # Free the tape as we go; a second backward is a caller bug.
            node._backward = None
            node._parents = ()
        self._done = True

    # arithmetic ------------------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(self, other)

    def __sub__(self, other):
        if isinstance(other, Tensor):
            return add(self, mul(other, -1.0))
        return add(self, -other)

    def __rsub__(self, other):
        return add(mul(self, -1.0), other)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(self, other)

    def __neg__(self):
        return mul(self, -1.0)

    def __truediv__(self, other):
        if isinstance(other, Tensor):
            raise TypeError("tensor/tensor division is not a recorded op")
        return mul(self, 1.0 / other)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, key):
        return take(self, key)

    def sum(self, axis=None, keepdims=False):
        return tsum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims=False):
        return tmean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def transpose(self, axes):
        return transpose(self, axes)

    def __repr__(self):
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"


class Parameter(Tensor):
    """A named trainable tensor; grad is always allocated (zeros)."""

    __slots__ = ("name",)

    def __init__(self, name: str, data):
        super().__init__(data, requires_grad=True)
        self.name = name
        self.grad = np.zeros_like(self.data)

    def __repr__(self):
        return f"Parameter({self.name!r}, shape={self.shape})"


# tape plumbing --------------------------------------------------------------


def _toposort(root: Tensor) -> list[Tensor]:
    topo: list[Tensor] = []
    visited: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, processed = stack.pop()
        if processed:
            topo.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if p.requires_grad and id(p) not in visited:
                stack.append((p, False))
    return topo


def _make(data: np.ndarray, parents: tuple, backward) -> Tensor:
    out = Tensor(data)
    if _grad_enabled and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = parents
        out._backward = backward
    return out


def _accum(t: Tensor, g: np.ndarray):
    if not t.requires_grad:
        return
    if t.grad is None:
        t.grad = np.zeros_like(t.data)
    t.grad += g


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to the operand's shape."""
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


def _index_add(acc: np.ndarray, key, g: np.ndarray):
    # Fancy indices may repeat, so they need unbuffered accumulation.
    parts = key if isinstance(key, tuple) else (key,)
    fancy = any(isinstance(p, (np.ndarray, list)) for p in parts)
    if fancy:
        np.add.at(acc, key, g)
    else:
        acc[key] += g


# primitive ops ---------------------------------------------------------------


def add(a: Tensor, b) -> Tensor:
    if not isinstance(b, Tensor):
        b_arr = np.asarray(b, dtype=np.float64)
        out_data = a.data + b_arr

        def back():
            _accum(a, _unbroadcast(out.grad, a.shape))

        out = _make(out_data, (a,), back)
        return out

    out_data = a.data + b.data

    def back():
        _accum(a, _unbroadcast(out.grad, a.shape))
        _accum(b, _unbroadcast(out.grad, b.shape))

    out = _make(out_data, (a, b), back)
    return out


def mul(a: Tensor, b) -> Tensor:
    if not isinstance(b, Tensor):
        b_arr = np.asarray(b, dtype=np.float64)
        out_data = a.data * b_arr

        def back():
            _accum(a, _unbroadcast(out.grad * b_arr, a.shape))

        out = _make(out_data, (a,), back)
        return out

    out_data = a.data * b.data

    def back():
        _accum(a, _unbroadcast(out.grad * b.data, a.shape))
        _accum(b, _unbroadcast(out.grad * a.data, b.shape))

    out = _make(out_data, (a, b), back)
    return out


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.ndim < 2 or b.ndim < 2:
        raise ValueError("matmul operands must have rank >= 2")
    out_data = np.matmul(a.data, b.data)

    def back():
        g = out.grad
        _accum(a, _unbroadcast(np.matmul(g, np.swapaxes(b.data, -1, -2)), a.shape))
        _accum(b, _unbroadcast(np.matmul(np.swapaxes(a.data, -1, -2), g), b.shape))

    out = _make(out_data, (a, b), back)
    return out


def tanh(x: Tensor) -> Tensor:
    y = np.tanh(x.data)

    def back():
        _accum(x, out.grad * (1.0 - y * y))

    out = _make(y, (x,), back)
    return out


def sigmoid(x: Tensor) -> Tensor:
    # Split by sign to avoid overflow in exp.
    d = x.data
    y = np.where(d >= 0, 1.0 / (1.0 + np.exp(-np.abs(d))),
                 np.exp(-np.abs(d)) / (1.0 + np.exp(-np.abs(d))))

    def back():
        _accum(x, out.grad * y * (1.0 - y))

    out = _make(y, (x,), back)
    return out


def relu(x: Tensor) -> Tensor:
    y = np.maximum(x.data, 0.0)

    def back():
        _accum(x, out.grad * (x.data > 0.0))

    out = _make(y, (x,), back)
    return out


def gelu(x: Tensor) -> Tensor:
    # tanh approximation, the variant used by the public BERT code.
    d = x.data
    inner = _GELU_C * (d + 0.044715 * d ** 3)
    t = np.tanh(inner)
    y = 0.5 * d * (1.0 + t)

    def back():
        dinner = _GELU_C * (1.0 + 3 * 0.044715 * d ** 2)
        dy = 0.5 * (1.0 + t) + 0.5 * d * (1.0 - t * t) * dinner
        _accum(x, out.grad * dy)

    out = _make(y, (x,), back)
    return out


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-12) -> Tensor:
    """Normalize over the last axis, then scale and shift."""
    d = x.data
    mu = d.mean(axis=-1, keepdims=True)
    xc = d - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv
    y = xhat * gain.data + bias.data

    def back():
        g = out.grad
        n = d.shape[-1]
        dxhat = g * gain.data
        # Fused layer-norm backward for biased variance.
        dx = (inv / n) * (
            n * dxhat
            - dxhat.sum(axis=-1, keepdims=True)
            - xhat * (dxhat * xhat).sum(axis=-1, keepdims=True)
        )
        _accum(x, dx)
        _accum(gain, _unbroadcast(g * xhat, gain.shape))
        _accum(bias, _unbroadcast(g, bias.shape))

    out = _make(y, (x, gain, bias), back)
    return out


def softmax_with_temperature(logits: Tensor, temperature: float) -> Tensor:
    """Temperature-scaled softmax over the last axis (max-subtracted)."""
    if not temperature > 0:
        raise ValueError(f"temperature must be positive, got {temperature}")
    z = logits.data / temperature
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    y = e / e.sum(axis=-1, keepdims=True)

    def back():
        g = out.grad
        dot = (g * y).sum(axis=-1, keepdims=True)
        _accum(logits, y * (g - dot) / temperature)

    out = _make(y, (logits,), back)
    return out


def cross_entropy(target: Tensor, probs: Tensor) -> Tensor:
    """H(p, q) = -sum p_i ln q_i; rank-2 inputs average over rows.

    q entries below LOG_EPS are clamped, so H never returns NaN even on
    degenerate distributions.
    """
    p = target if isinstance(target, Tensor) else Tensor(target)
    q = probs if isinstance(probs, Tensor) else Tensor(probs)
    if p.shape != q.shape:
        raise ValueError(f"shape mismatch: target {p.shape} vs probs {q.shape}")
    if p.ndim not in (1, 2):
        raise ValueError(f"cross_entropy expects rank 1 or 2, got rank {p.ndim}")
    qc = np.maximum(q.data, LOG_EPS)
    logq = np.log(qc)
    rows = -(p.data * logq).sum(axis=-1)
    n_rows = 1 if p.ndim == 1 else p.shape[0]
    value = rows if p.ndim == 1 else rows.mean()

    def back():
        g = float(out.grad)
        scale = g / n_rows
        if q.requires_grad:
            dq = np.where(q.data > LOG_EPS, -p.data / qc, 0.0) * scale
            _accum(q, dq)
        if p.requires_grad:
            _accum(p, -logq * scale)

    out = _make(np.asarray(value), (p, q), back)
    return out


def embedding(table: Tensor, ids: np.ndarray) -> Tensor:
    """Row lookup: out[..., :] = table[ids[...], :]."""
    ids = np.asarray(ids)
    if ids.size and (ids.min() < 0 or ids.max() >= table.shape[0]):
        raise ValueError(
            f"embedding id out of range [0, {table.shape[0]}): "
            f"min={ids.min()}, max={ids.max()}"
        )
    out_data = table.data[ids]

    def back():
        if table.grad is None:
            table.grad = np.zeros_like(table.data)
        np.add.at(table.grad, ids, out.grad)

    out = _make(out_data, (table,), back)
    return out


def concat(tensors: list[Tensor], axis: int = -1) -> Tensor:
    out_data = np.concatenate([t.data for t in tensors], axis=axis)

    def back():
        sizes = [t.shape[axis] for t in tensors]
        offsets = np.cumsum([0] + sizes)
        for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
            sl = [slice(None)] * out_data.ndim
            sl[axis] = slice(lo, hi)
            _accum(t, out.grad[tuple(sl)])

    out = _make(out_data, tuple(tensors), back)
    return out


def stack(tensors: list[Tensor], axis: int = 0) -> Tensor:
    out_data = np.stack([t.data for t in tensors], axis=axis)

    def back():
        for i, t in enumerate(tensors):
            _accum(t, np.take(out.grad, i, axis=axis))

    out = _make(out_data, tuple(tensors), back)
    return out


def take(x: Tensor, key) -> Tensor:
    """Indexing/slicing; gradients scatter-add back into the source."""
    out_data = np.array(x.data[key])

    def back():
        if x.grad is None:
            x.grad = np.zeros_like(x.data)
        _index_add(x.grad, key, out.grad)

    out = _make(out_data, (x,), back)
    return out


def reshape(x: Tensor, shape: tuple[int, ...]) -> Tensor:
    out_data = x.data.reshape(shape)

    def back():
        _accum(x, out.grad.reshape(x.shape))

    out = _make(out_data, (x,), back)
    return out


def transpose(x: Tensor, axes: tuple[int, ...]) -> Tensor:
    out_data = np.transpose(x.data, axes)

    def back():
        inv = np.argsort(axes)
        _accum(x, np.transpose(out.grad, inv))

    out = _make(out_data, (x,), back)
    return out


def tsum(x: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    out_data = x.data.sum(axis=axis, keepdims=keepdims)

    def back():
        g = out.grad
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        _accum(x, np.broadcast_to(g, x.shape).copy())

    out = _make(np.asarray(out_data), (x,), back)
    return out


def tmean(x: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    if axis is None:
        n = x.data.size
    else:
        n = x.shape[axis]
    return mul(tsum(x, axis=axis, keepdims=keepdims), 1.0 / n)
