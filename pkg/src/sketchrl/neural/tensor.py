"""Reverse-mode autodiff on numpy arrays.

A Tensor wraps an ndarray plus an optional gradient; operations record
backward closures on a tape that Tensor.backward replays in reverse
topological order. Convolutions route their patch gather/scatter through the
selected kernel backend and their contractions through numpy/BLAS.
"""

from __future__ import annotations

import numpy as np

from ..errors import ShapeError, StateError
from .backend import kernels as K

_grad_enabled = True


class no_grad:
    """Context manager that disables tape recording (inference hot paths)."""

    def __enter__(self):
        global _grad_enabled
        self._prev = _grad_enabled
        _grad_enabled = False

    def __exit__(self, *exc):
        global _grad_enabled
        _grad_enabled = self._prev
        return False


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Reduce a gradient back to the shape it was broadcast from."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data)
        self.grad = None
        self.requires_grad = requires_grad
        self._parents = ()
        self._backward = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype}, grad={self.grad is not None})"

    def _accumulate(self, grad: np.ndarray, fresh: bool = False):
        """Add an incoming gradient; `fresh` marks a newly allocated array the
        closure hands over, letting the first accumulation skip a copy."""
        if self.grad is None:
            if fresh and grad.dtype == self.data.dtype:
                self.grad = grad
            else:
                self.grad = grad.astype(self.data.dtype, copy=True)
        else:
            self.grad += grad

    def backward(self, upstream=None):
        """Backpropagate from this tensor, populating .grad on the graph."""
        if upstream is None:
            if self.data.size != 1:
                raise ShapeError("backward() without upstream needs a scalar tensor")
            upstream = np.ones_like(self.data)
        else:
            upstream = np.asarray(upstream, dtype=self.data.dtype)
            if upstream.shape != self.data.shape:
                raise ShapeError("upstream gradient shape mismatch")
        order = []
        seen = set()

        def visit(t):
            if id(t) in seen:
                return
            seen.add(id(t))
            for p in t._parents:
                visit(p)
            order.append(t)

        visit(self)
        self.grad = upstream.copy()
        for t in reversed(order):
            if t._backward is not None and t.grad is not None:
                t._backward(t.grad)

    # ---- helpers ----------------------------------------------------------

    def detach(self) -> "Tensor":
        return Tensor(self.data)


def _wrap(value) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def _needs_grad(t: Tensor) -> bool:
    """Whether gradient must flow into this tensor (parameter or intermediate)."""
    return t.requires_grad or bool(t._parents)


def _make(data, parents, backward) -> Tensor:
    out = Tensor(data)
    if _grad_enabled and any(p.requires_grad or p._parents for p in parents):
        out.requires_grad = any(p.requires_grad for p in parents)
        out._parents = tuple(parents)
        out._backward = backward
    return out


def add(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    data = a.data + b.data

    def backward(g):
        if _needs_grad(a):
            a._accumulate(_unbroadcast(g, a.data.shape))
        if _needs_grad(b):
            b._accumulate(_unbroadcast(g, b.data.shape))

    return _make(data, (a, b), backward)


def sub(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    data = a.data - b.data

    def backward(g):
        if _needs_grad(a):
            a._accumulate(_unbroadcast(g, a.data.shape))
        if _needs_grad(b):
            b._accumulate(_unbroadcast(-g, b.data.shape), fresh=True)

    return _make(data, (a, b), backward)


def mul(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    data = a.data * b.data

    def backward(g):
        if _needs_grad(a):
            a._accumulate(_unbroadcast(g * b.data, a.data.shape), fresh=True)
        if _needs_grad(b):
            b._accumulate(_unbroadcast(g * a.data, b.data.shape), fresh=True)

    return _make(data, (a, b), backward)


def scale(a, s: float) -> Tensor:
    a = _wrap(a)
    data = a.data * a.data.dtype.type(s)

    def backward(g):
        a._accumulate(g * a.data.dtype.type(s), fresh=True)

    return _make(data, (a,), backward)


def neg(a) -> Tensor:
    return scale(a, -1.0)


def matmul(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    data = np.matmul(a.data, b.data)

    def backward(g):
        if _needs_grad(a):
            ga = np.matmul(g, np.swapaxes(b.data, -1, -2))
            a._accumulate(_unbroadcast(ga, a.data.shape), fresh=True)
        if _needs_grad(b):
            gb = np.matmul(np.swapaxes(a.data, -1, -2), g)
            b._accumulate(_unbroadcast(gb, b.data.shape), fresh=True)

    return _make(data, (a, b), backward)


class ReluMaskPin:
    """Freeze ReLU active-sets across repeated forward passes.

    Finite-difference checks perturb parameters; without pinning, a
    pre-activation crossing zero makes the loss non-differentiable at the
    probe point and central differences disagree with the subgradient the
    backward pass uses. Record masks at the base point, then replay them.
    """

    def __init__(self):
        self.masks: list[np.ndarray] = []
        self.mode = "record"
        self.idx = 0

    def replay(self):
        self.mode = "replay"
        self.idx = 0
        return self

    def __enter__(self):
        global _relu_pin
        self._prev = _relu_pin
        _relu_pin = self
        if self.mode == "replay":
            self.idx = 0
        return self

    def __exit__(self, *exc):
        global _relu_pin
        _relu_pin = self._prev
        return False


_relu_pin: ReluMaskPin | None = None


def relu(a) -> Tensor:
    a = _wrap(a)
    pin = _relu_pin
    if pin is None:
        data = np.maximum(a.data, 0)

        def backward(g):
            g *= a.data > 0  # g is exclusively owned by the consumed node
            a._accumulate(g, fresh=True)

        return _make(data, (a,), backward)
    if pin.mode == "record":
        mask = a.data > 0
        pin.masks.append(mask)
    else:
        mask = pin.masks[pin.idx]
        pin.idx += 1
    data = a.data * mask

    def backward(g):
        g *= mask
        a._accumulate(g, fresh=True)

    return _make(data, (a,), backward)


def tanh(a) -> Tensor:
    a = _wrap(a)
    data = np.tanh(a.data)

    def backward(g):
        g *= 1.0 - data * data
        a._accumulate(g, fresh=True)

    return _make(data, (a,), backward)


def sigmoid(a) -> Tensor:
    a = _wrap(a)
    data = 1.0 / (1.0 + np.exp(-a.data))

    def backward(g):
        g *= data * (1.0 - data)
        a._accumulate(g, fresh=True)

    return _make(data, (a,), backward)


def exp(a) -> Tensor:
    a = _wrap(a)
    data = np.exp(a.data)

    def backward(g):
        g *= data
        a._accumulate(g, fresh=True)

    return _make(data, (a,), backward)


def log(a) -> Tensor:
    a = _wrap(a)
    data = np.log(a.data)

    def backward(g):
        a._accumulate(g / a.data, fresh=True)

    return _make(data, (a,), backward)


def square(a) -> Tensor:
    a = _wrap(a)
    data = a.data * a.data

    def backward(g):
        a._accumulate(g * 2.0 * a.data, fresh=True)

    return _make(data, (a,), backward)


def clamp(a, lo: float, hi: float) -> Tensor:
    """Clip values; gradient is zero where the clip is active."""
    a = _wrap(a)
    data = np.clip(a.data, lo, hi)

    def backward(g):
        g *= (a.data >= lo) & (a.data <= hi)
        a._accumulate(g, fresh=True)

    return _make(data, (a,), backward)


def reshape(a, shape) -> Tensor:
    a = _wrap(a)
    data = a.data.reshape(shape)

    def backward(g):
        a._accumulate(g.reshape(a.data.shape))

    return _make(data, (a,), backward)


def concat(tensors, axis: int = -1) -> Tensor:
    tensors = [_wrap(t) for t in tensors]
    data = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.data.shape[axis] for t in tensors]

    def backward(g):
        offset = 0
        for t, size in zip(tensors, sizes):
            idx = [slice(None)] * g.ndim
            idx[axis] = slice(offset, offset + size)
            t._accumulate(g[tuple(idx)])
            offset += size

    return _make(data, tuple(tensors), backward)


def narrow(a, start: int, length: int) -> Tensor:
    """Contiguous slice along the leading axis."""
    a = _wrap(a)
    data = a.data[start:start + length]

    def backward(g):
        full = np.zeros_like(a.data)
        full[start:start + length] = g
        a._accumulate(full, fresh=True)

    return _make(data, (a,), backward)


def tsum(a) -> Tensor:
    a = _wrap(a)
    data = np.asarray(a.data.sum(), dtype=a.data.dtype)

    def backward(g):
        a._accumulate(np.broadcast_to(g, a.data.shape).astype(a.data.dtype), fresh=True)

    return _make(data, (a,), backward)


def tmean(a) -> Tensor:
    a = _wrap(a)
    n = a.data.size
    data = np.asarray(a.data.sum() / n, dtype=a.data.dtype)

    def backward(g):
        a._accumulate(np.broadcast_to(g / n, a.data.shape).astype(a.data.dtype), fresh=True)

    return _make(data, (a,), backward)


def mse(pred, target) -> Tensor:
    """Mean squared error over every element."""
    return tmean(square(sub(pred, target)))


def dropout(a, rate: float, rng: np.random.Generator) -> Tensor:
    """Inverted dropout with a freshly drawn mask; call only in train mode."""
    a = _wrap(a)
    if rate <= 0.0:
        return a
    keep = (rng.random(a.data.shape) >= rate).astype(a.data.dtype)
    keep /= (1.0 - rate)

    def backward(g):
        g *= keep
        a._accumulate(g, fresh=True)

    return _make(a.data * keep, (a,), backward)


def conv2d(x, w, b, stride: int, pad: int) -> Tensor:
    """2D convolution in NHWC layout: x (N,H,W,Cin), w (Cout,Cin,kh,kw), b (Cout,).

    The weight parameter keeps the conventional (Cout,Cin,kh,kw) shape; it is
    repacked to the (kh*kw*Cin, Cout) GEMM layout per call (small arrays).
    """
    x, w, b = _wrap(x), _wrap(w), _wrap(b)
    n, h, wd, cin = x.data.shape
    cout, cin_w, kh, kw = w.data.shape
    if cin != cin_w:
        raise ShapeError(f"conv2d channel mismatch: input {cin}, weight {cin_w}")
    oh = K.conv_out_size(h, kh, stride, pad)
    ow = K.conv_out_size(wd, kw, stride, pad)
    col = K.im2col(x.data, kh, kw, stride, pad)
    w2 = np.ascontiguousarray(w.data.transpose(2, 3, 1, 0).reshape(-1, cout))
    out2 = col @ w2 + b.data
    data = out2.reshape(n, oh, ow, cout)

    def backward(g):
        g2 = g.reshape(-1, cout)
        dw2 = col.T @ g2  # (kh*kw*cin, cout)
        w._accumulate(np.ascontiguousarray(
            dw2.reshape(kh, kw, cin, cout).transpose(3, 2, 0, 1)), fresh=True)
        b._accumulate(g2.sum(axis=0), fresh=True)
        if _needs_grad(x):
            dcol = g2 @ w2.T
            x._accumulate(K.col2im(dcol, n, h, wd, cin, kh, kw, stride, pad), fresh=True)

    return _make(data, (x, w, b), backward)


def conv2d_transpose(x, w, b, stride: int, pad: int) -> Tensor:
    """Transposed 2D convolution in NHWC layout: x (N,H,W,Cin), w (Cin,Cout,kh,kw).

    Output spatial size is (H-1)*stride - 2*pad + kh; the op is the adjoint of
    conv2d with the same stride and padding.
    """
    x, w, b = _wrap(x), _wrap(w), _wrap(b)
    n, h, wd, cin = x.data.shape
    cin_w, cout, kh, kw = w.data.shape
    if cin != cin_w:
        raise ShapeError(f"conv2d_transpose channel mismatch: input {cin}, weight {cin_w}")
    oh = (h - 1) * stride - 2 * pad + kh
    ow = (wd - 1) * stride - 2 * pad + kw
    x2 = x.data.reshape(-1, cin)
    w2 = np.ascontiguousarray(w.data.transpose(0, 2, 3, 1).reshape(cin, -1))
    col = x2 @ w2  # (n*h*w, kh*kw*cout)
    data = K.col2im(col, n, oh, ow, cout, kh, kw, stride, pad)
    data = data + b.data

    def backward(g):
        gcol = K.im2col(g, kh, kw, stride, pad)
        if _needs_grad(x):
            x._accumulate((gcol @ w2.T).reshape(n, h, wd, cin), fresh=True)
        dw2 = x2.T @ gcol
        w._accumulate(np.ascontiguousarray(
            dw2.reshape(cin, kh, kw, cout).transpose(0, 3, 1, 2)), fresh=True)
        b._accumulate(g.sum(axis=(0, 1, 2)), fresh=True)

    return _make(data, (x, w, b), backward)
