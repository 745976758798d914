"""Kernel backend selection.

The hot kernels (im2col/col2im for convolutions, image warps, rasterization)
have a numba-compiled implementation and a pure-numpy fallback. Selection is
controlled by the SKETCHRL_BACKEND environment variable:

    auto   (default) numba when importable, numpy otherwise
    numba  require the numba kernels, fail if unavailable
    numpy  force the pure-numpy fallback

Dense linear algebra always goes through numpy/BLAS in both modes.
"""

from __future__ import annotations

import os

from ..errors import ConfigError

_ENV_VAR = "SKETCHRL_BACKEND"


def _select():
    choice = os.environ.get(_ENV_VAR, "auto").lower()
    if choice not in ("auto", "numba", "numpy"):
        raise ConfigError(f"{_ENV_VAR} must be auto|numba|numpy, got {choice!r}")
    if choice == "numpy":
        from . import kernels_numpy as mod
        return mod, "numpy"
    try:
        from . import kernels_numba as mod
        return mod, "numba"
    except ImportError:
        if choice == "numba":
            raise ConfigError("SKETCHRL_BACKEND=numba but numba is not importable")
        from . import kernels_numpy as mod
        return mod, "numpy"


kernels, BACKEND_NAME = _select()


def get_kernels(name: str):
    """Explicit backend lookup, used by the parity tests and the benchmark."""
    if name == "numpy":
        from . import kernels_numpy
        return kernels_numpy
    if name == "numba":
        from . import kernels_numba
        return kernels_numba
    raise ConfigError(f"unknown backend {name!r}")
