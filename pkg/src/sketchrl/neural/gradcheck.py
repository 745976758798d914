"""Finite-difference verification of backpropagated gradients.

The reference derivative is computed on a float64 shadow copy of the network
so the comparison measures the accuracy of the (possibly 32-bit) backward
pass rather than finite-difference roundoff.
"""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError
from . import layers as L
from . import tensor as T


def gradient_check(net: L.Sequential, x: np.ndarray, eps: float = 1e-3,
                   mode: str = "eval", seed: int = 0) -> float:
    """Max relative error between backprop and central-difference gradients.

    The loss is sum(output * R) for a fixed random R. In train mode the
    dropout rng is re-seeded identically for every evaluation so masks stay
    pinned across perturbations.
    """
    n_params = sum(p.data.size for p in net.params())
    if n_params > 10_000:
        raise ConfigError(f"gradient_check is for small nets (<= 1e4 params), got {n_params}")

    probe_rng = np.random.default_rng(seed + 1)

    def run(network, inp):
        out = network(T.Tensor(inp), mode, np.random.default_rng(seed))
        return out

    out = run(net, x)
    weights = probe_rng.normal(size=out.shape)
    net.zero_grad()
    out.backward(weights.astype(out.dtype))
    bp_grads = [p.grad if p.grad is not None else np.zeros_like(p.data) for p in net.params()]

    shadow = net.astype(np.float64)
    x64 = x.astype(np.float64)

    # freeze the ReLU active-sets of the base point so perturbations cannot
    # step across a kink (dropout masks are already pinned via the seed)
    pin = T.ReluMaskPin()
    with pin, T.no_grad():
        run(shadow, x64)

    worst = 0.0
    for p, bp in zip(shadow.params(), bp_grads):
        flat = p.data.reshape(-1)
        fd = np.zeros_like(flat)
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + eps
            with pin.replay(), T.no_grad():
                hi = float((run(shadow, x64).data * weights).sum())
            flat[j] = orig - eps
            with pin.replay(), T.no_grad():
                lo = float((run(shadow, x64).data * weights).sum())
            flat[j] = orig
            fd[j] = (hi - lo) / (2.0 * eps)
        bp_flat = bp.reshape(-1).astype(np.float64)
        denom = np.maximum(np.abs(fd) + np.abs(bp_flat), 1e-6)
        worst = max(worst, float(np.max(np.abs(fd - bp_flat) / denom)))
    return worst
