"""Layer abstractions over the autodiff tensor ops."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ShapeError, StateError
from . import tensor as T
from .tensor import Tensor


@dataclass
class LayerSpec:
    """Serializable description of one layer."""

    kind: str
    args: dict = field(default_factory=dict)


def xavier_uniform(shape, fan_in: int, fan_out: int, rng: np.random.Generator,
                   dtype=np.float32) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape).astype(dtype)


class Layer:
    def params(self) -> list[Tensor]:
        return []

    def __call__(self, x: Tensor, mode: str = "eval", rng: np.random.Generator | None = None) -> Tensor:
        raise NotImplementedError

    def spec(self) -> LayerSpec:
        raise NotImplementedError

    def state_arrays(self) -> list[np.ndarray]:
        return [p.data for p in self.params()]

    def load_state_arrays(self, arrays: list[np.ndarray]) -> None:
        own = self.params()
        if len(arrays) != len(own):
            raise ShapeError(f"expected {len(own)} arrays, got {len(arrays)}")
        for p, a in zip(own, arrays):
            if p.data.shape != a.shape:
                raise ShapeError(f"array shape {a.shape} != parameter shape {p.data.shape}")
            p.data = a.astype(p.data.dtype, copy=True)


class Dense(Layer):
    def __init__(self, in_size: int, out_size: int, rng: np.random.Generator, dtype=np.float32):
        self.in_size = in_size
        self.out_size = out_size
        self.w = Tensor(xavier_uniform((in_size, out_size), in_size, out_size, rng, dtype),
                        requires_grad=True)
        self.b = Tensor(np.zeros(out_size, dtype=dtype), requires_grad=True)

    def params(self):
        return [self.w, self.b]

    def __call__(self, x, mode="eval", rng=None):
        return T.add(T.matmul(x, self.w), self.b)

    def spec(self):
        return LayerSpec("dense", {"in_size": self.in_size, "out_size": self.out_size})


class Conv2d(Layer):
    def __init__(self, in_ch: int, out_ch: int, kernel: int, stride: int, pad: int,
                 rng: np.random.Generator, dtype=np.float32):
        self.in_ch, self.out_ch = in_ch, out_ch
        self.kernel, self.stride, self.pad = kernel, stride, pad
        fan_in = in_ch * kernel * kernel
        fan_out = out_ch * kernel * kernel
        self.w = Tensor(xavier_uniform((out_ch, in_ch, kernel, kernel), fan_in, fan_out, rng, dtype),
                        requires_grad=True)
        self.b = Tensor(np.zeros(out_ch, dtype=dtype), requires_grad=True)

    def params(self):
        return [self.w, self.b]

    def __call__(self, x, mode="eval", rng=None):
        return T.conv2d(x, self.w, self.b, self.stride, self.pad)

    def spec(self):
        return LayerSpec("conv2d", {"in_ch": self.in_ch, "out_ch": self.out_ch,
                                    "kernel": self.kernel, "stride": self.stride, "pad": self.pad})


class ConvTranspose2d(Layer):
    def __init__(self, in_ch: int, out_ch: int, kernel: int, stride: int, pad: int,
                 rng: np.random.Generator, dtype=np.float32):
        self.in_ch, self.out_ch = in_ch, out_ch
        self.kernel, self.stride, self.pad = kernel, stride, pad
        fan_in = in_ch * kernel * kernel
        fan_out = out_ch * kernel * kernel
        self.w = Tensor(xavier_uniform((in_ch, out_ch, kernel, kernel), fan_in, fan_out, rng, dtype),
                        requires_grad=True)
        self.b = Tensor(np.zeros(out_ch, dtype=dtype), requires_grad=True)

    def params(self):
        return [self.w, self.b]

    def __call__(self, x, mode="eval", rng=None):
        return T.conv2d_transpose(x, self.w, self.b, self.stride, self.pad)

    def spec(self):
        return LayerSpec("transposed_conv2d", {"in_ch": self.in_ch, "out_ch": self.out_ch,
                                               "kernel": self.kernel, "stride": self.stride,
                                               "pad": self.pad})


class ReLU(Layer):
    def __call__(self, x, mode="eval", rng=None):
        return T.relu(x)

    def spec(self):
        return LayerSpec("relu")


class Tanh(Layer):
    def __call__(self, x, mode="eval", rng=None):
        return T.tanh(x)

    def spec(self):
        return LayerSpec("tanh")


class Sigmoid(Layer):
    def __call__(self, x, mode="eval", rng=None):
        return T.sigmoid(x)

    def spec(self):
        return LayerSpec("sigmoid")


class Flatten(Layer):
    def __call__(self, x, mode="eval", rng=None):
        return T.reshape(x, (x.shape[0], -1))

    def spec(self):
        return LayerSpec("flatten")


class Reshape(Layer):
    def __init__(self, shape: tuple):
        self.target = tuple(shape)

    def __call__(self, x, mode="eval", rng=None):
        return T.reshape(x, (x.shape[0],) + self.target)

    def spec(self):
        return LayerSpec("reshape", {"shape": list(self.target)})


class Dropout(Layer):
    def __init__(self, rate: float):
        self.rate = rate

    def __call__(self, x, mode="eval", rng=None):
        if mode != "train" or self.rate <= 0.0:
            return x
        if rng is None:
            raise StateError("dropout in train mode needs an rng")
        return T.dropout(x, self.rate, rng)

    def spec(self):
        return LayerSpec("dropout", {"rate": self.rate})


def build_layer(spec: LayerSpec, rng: np.random.Generator, dtype=np.float32) -> Layer:
    kind, a = spec.kind, spec.args
    if kind == "dense":
        return Dense(a["in_size"], a["out_size"], rng, dtype)
    if kind == "conv2d":
        return Conv2d(a["in_ch"], a["out_ch"], a["kernel"], a["stride"], a["pad"], rng, dtype)
    if kind == "transposed_conv2d":
        return ConvTranspose2d(a["in_ch"], a["out_ch"], a["kernel"], a["stride"], a["pad"], rng, dtype)
    if kind == "relu":
        return ReLU()
    if kind == "tanh":
        return Tanh()
    if kind == "sigmoid":
        return Sigmoid()
    if kind == "flatten":
        return Flatten()
    if kind == "reshape":
        return Reshape(tuple(a["shape"]))
    if kind == "dropout":
        return Dropout(a["rate"])
    raise ShapeError(f"unknown layer kind {kind!r}")


class Sequential:
    """Ordered layer stack with the forward/backward surface the trainers use."""

    def __init__(self, layers: list[Layer]):
        self.layers = layers
        self._last_output: Tensor | None = None

    def params(self) -> list[Tensor]:
        out = []
        for layer in self.layers:
            out.extend(layer.params())
        return out

    def zero_grad(self) -> None:
        for p in self.params():
            p.grad = None

    def __call__(self, x: Tensor, mode: str = "eval", rng: np.random.Generator | None = None) -> Tensor:
        for layer in self.layers:
            x = layer(x, mode, rng)
        return x

    def specs(self) -> list[LayerSpec]:
        return [layer.spec() for layer in self.layers]

    @classmethod
    def from_specs(cls, specs: list[LayerSpec], rng: np.random.Generator, dtype=np.float32) -> "Sequential":
        return cls([build_layer(s, rng, dtype) for s in specs])

    def astype(self, dtype) -> "Sequential":
        """Deep copy with parameters cast to the given dtype (oracle checks)."""
        rng = np.random.default_rng(0)
        clone = Sequential.from_specs(self.specs(), rng, dtype)
        for src, dst in zip(self.layers, clone.layers):
            dst.load_state_arrays([a.astype(dtype) for a in src.state_arrays()])
        return clone

    def copy(self) -> "Sequential":
        return self.astype(self.params()[0].data.dtype if self.params() else np.float32)


def mlp_specs(sizes: list[int], activation: str = "relu", out_activation: str | None = None,
              hidden_dropout: float = 0.0) -> list[LayerSpec]:
    """Dense stack: sizes[0] -> ... -> sizes[-1] with activations between."""
    specs: list[LayerSpec] = []
    for i in range(len(sizes) - 1):
        specs.append(LayerSpec("dense", {"in_size": sizes[i], "out_size": sizes[i + 1]}))
        last = i == len(sizes) - 2
        if not last:
            specs.append(LayerSpec(activation))
            if hidden_dropout > 0.0:
                specs.append(LayerSpec("dropout", {"rate": hidden_dropout}))
        elif out_activation:
            specs.append(LayerSpec(out_activation))
    return specs


def forward(net: Sequential, x, mode: str = "eval", rng: np.random.Generator | None = None) -> Tensor:
    """Run the network; the output stays linked to the tape for backward()."""
    t = x if isinstance(x, Tensor) else Tensor(x)
    out = net(t, mode, rng)
    net._last_output = out
    return out


def backward(net: Sequential, loss_grad) -> list[np.ndarray]:
    """Backpropagate from the last forward output; returns per-parameter grads."""
    if net._last_output is None:
        raise StateError("backward called before forward")
    net.zero_grad()
    net._last_output.backward(loss_grad)
    grads = []
    for p in net.params():
        grads.append(p.grad if p.grad is not None else np.zeros_like(p.data))
    return grads
