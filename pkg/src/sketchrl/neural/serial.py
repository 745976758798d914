"""Binary weight file format.

Layout (all integers little-endian unsigned 32-bit unless noted):

    magic   8 bytes  b"SKRLNN\\x00\\x01"  (trailing byte is the format version)
    count   u32      number of layers
    per layer:
        tag_len u32, tag utf-8 bytes     layer kind tag
        n_arr   u32                      number of parameter arrays
        per array:
            ndim u32, dims u32 * ndim
            data  raw little-endian float32, C order

Non-parametric layers (relu, flatten, ...) appear with n_arr = 0 so the file
mirrors the architecture one-to-one.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from ..errors import ShapeError
from .layers import Sequential

MAGIC = b"SKRLNN\x00\x01"


def save_layers(path, nets: list[Sequential]) -> None:
    """Write the layers of the given networks, in order, to one weight file."""
    layers = [layer for net in nets for layer in net.layers]
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(layers)))
        for layer in layers:
            tag = layer.spec().kind.encode()
            fh.write(struct.pack("<I", len(tag)))
            fh.write(tag)
            arrays = layer.state_arrays()
            fh.write(struct.pack("<I", len(arrays)))
            for a in arrays:
                fh.write(struct.pack("<I", a.ndim))
                fh.write(struct.pack(f"<{a.ndim}I", *a.shape))
                fh.write(np.ascontiguousarray(a, dtype="<f4").tobytes())


def read_layer_arrays(path) -> list[tuple[str, list[np.ndarray]]]:
    """Read back (kind tag, arrays) per layer."""
    raw = Path(path).read_bytes()
    if raw[:8] != MAGIC:
        raise ShapeError(f"{path}: not a weight file (bad magic)")
    off = 8
    (count,) = struct.unpack_from("<I", raw, off)
    off += 4
    out = []
    for _ in range(count):
        (tag_len,) = struct.unpack_from("<I", raw, off)
        off += 4
        tag = raw[off:off + tag_len].decode()
        off += tag_len
        (n_arr,) = struct.unpack_from("<I", raw, off)
        off += 4
        arrays = []
        for _ in range(n_arr):
            (ndim,) = struct.unpack_from("<I", raw, off)
            off += 4
            shape = struct.unpack_from(f"<{ndim}I", raw, off)
            off += 4 * ndim
            size = int(np.prod(shape)) if ndim else 1
            a = np.frombuffer(raw, dtype="<f4", count=size, offset=off).reshape(shape)
            off += 4 * size
            arrays.append(a.astype(np.float32))
        out.append((tag, arrays))
    return out


def load_layers(path, nets: list[Sequential]) -> None:
    """Load a weight file into networks whose combined layout must match it."""
    entries = read_layer_arrays(path)
    layers = [layer for net in nets for layer in net.layers]
    if len(entries) != len(layers):
        raise ShapeError(f"{path}: file has {len(entries)} layers, networks have {len(layers)}")
    for layer, (tag, arrays) in zip(layers, entries):
        if layer.spec().kind != tag:
            raise ShapeError(f"{path}: layer kind mismatch ({layer.spec().kind} != {tag})")
        layer.load_state_arrays(arrays)
