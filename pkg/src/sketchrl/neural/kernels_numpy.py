"""Pure-numpy implementations of the hot kernels.

Semantics must match kernels_numba exactly (same sampling conventions, same
zero padding behavior); the parity tests and benchmark compare the two.
"""

from __future__ import annotations

import numpy as np


def conv_out_size(size: int, k: int, stride: int, pad: int) -> int:
    return (size + 2 * pad - k) // stride + 1


def im2col(x: np.ndarray, kh: int, kw: int, stride: int, pad: int) -> np.ndarray:
    """(N, H, W, C) -> (N*OH*OW, kh*kw*C) patch matrix, zero-padded borders."""
    n, h, w, c = x.shape
    oh = conv_out_size(h, kh, stride, pad)
    ow = conv_out_size(w, kw, stride, pad)
    if pad > 0:
        xp = np.zeros((n, h + 2 * pad, w + 2 * pad, c), dtype=x.dtype)
        xp[:, pad:pad + h, pad:pad + w] = x
    else:
        xp = x
    s = xp.strides
    windows = np.lib.stride_tricks.as_strided(
        xp,
        shape=(n, oh, ow, kh, kw, c),
        strides=(s[0], s[1] * stride, s[2] * stride, s[1], s[2], s[3]),
        writeable=False,
    )
    return np.ascontiguousarray(windows).reshape(n * oh * ow, kh * kw * c)


def col2im(col: np.ndarray, n: int, h: int, w: int, c: int,
           kh: int, kw: int, stride: int, pad: int) -> np.ndarray:
    """Scatter-add transpose of im2col: (N*OH*OW, kh*kw*C) -> (N, H, W, C)."""
    oh = conv_out_size(h, kh, stride, pad)
    ow = conv_out_size(w, kw, stride, pad)
    hp, wp = h + 2 * pad, w + 2 * pad
    xp = np.zeros((n, hp, wp, c), dtype=col.dtype)
    patches = col.reshape(n, oh, ow, kh, kw, c)
    for i in range(kh):
        for j in range(kw):
            xp[:, i:i + oh * stride:stride, j:j + ow * stride:stride] += patches[:, :, :, i, j]
    return xp[:, pad:pad + h, pad:pad + w]


def affine_warp(img: np.ndarray, m: np.ndarray) -> np.ndarray:
    """Warp (H, W, C) float image by inverse map (x_src, y_src) = m @ (x, y, 1).

    Bilinear sampling; source reads outside the image contribute zero.
    """
    h, w, c = img.shape
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    sx = m[0, 0] * xs + m[0, 1] * ys + m[0, 2]
    sy = m[1, 0] * xs + m[1, 1] * ys + m[1, 2]
    ix = np.floor(sx).astype(np.int64)
    iy = np.floor(sy).astype(np.int64)
    fx = (sx - ix).astype(img.dtype)
    fy = (sy - iy).astype(img.dtype)

    out = np.zeros_like(img)
    for dy in (0, 1):
        for dx in (0, 1):
            px = ix + dx
            py = iy + dy
            valid = (px >= 0) & (px < w) & (py >= 0) & (py < h)
            wgt = np.where(dx == 1, fx, 1 - fx) * np.where(dy == 1, fy, 1 - fy)
            vals = np.zeros((h, w, c), dtype=img.dtype)
            vals[valid] = img[py[valid], px[valid]]
            out += vals * (wgt * valid)[..., None]
    return out


def grid_warp(img: np.ndarray, dx: np.ndarray, dy: np.ndarray) -> np.ndarray:
    """Warp by a per-pixel displacement field: sample source at (x+dx, y+dy)."""
    h, w, c = img.shape
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    sx = xs + dx
    sy = ys + dy
    ix = np.floor(sx).astype(np.int64)
    iy = np.floor(sy).astype(np.int64)
    fx = (sx - ix).astype(img.dtype)
    fy = (sy - iy).astype(img.dtype)
    out = np.zeros_like(img)
    for oy in (0, 1):
        for ox in (0, 1):
            px = ix + ox
            py = iy + oy
            valid = (px >= 0) & (px < w) & (py >= 0) & (py < h)
            wgt = np.where(ox == 1, fx, 1 - fx) * np.where(oy == 1, fy, 1 - fy)
            vals = np.zeros((h, w, c), dtype=img.dtype)
            vals[valid] = img[py[valid], px[valid]]
            out += vals * (wgt * valid)[..., None]
    return out


def affine_warp_batch(imgs: np.ndarray, ms: np.ndarray) -> np.ndarray:
    return np.stack([affine_warp(img, m) for img, m in zip(imgs, ms)])


def _upsample_grid(grid: np.ndarray, size: int) -> np.ndarray:
    g = grid.shape[0]
    coords = np.linspace(0, g - 1, size)
    i0 = np.floor(coords).astype(int)
    i1 = np.minimum(i0 + 1, g - 1)
    f = coords - i0
    return (grid[i0][:, i0] * np.outer(1 - f, 1 - f)
            + grid[i0][:, i1] * np.outer(1 - f, f)
            + grid[i1][:, i0] * np.outer(f, 1 - f)
            + grid[i1][:, i1] * np.outer(f, f))


def elastic_warp_batch(imgs: np.ndarray, grids: np.ndarray) -> np.ndarray:
    """Warp each image by its coarse displacement grid, upsampled bilinearly."""
    out = np.empty_like(imgs)
    size = imgs.shape[1]
    for i, (img, grid) in enumerate(zip(imgs, grids)):
        dx = _upsample_grid(grid[0], size)
        dy = _upsample_grid(grid[1], size)
        out[i] = grid_warp(img, dx, dy)
    return out


def draw_polyline(canvas: np.ndarray, pts: np.ndarray, colors: np.ndarray, width: int) -> None:
    """Stamp polyline segments into a (H, W, 3) uint8 canvas, in place.

    Each segment is sampled at one step per pixel of extent; the stamp is a
    width x width square centered on the sample.
    """
    h, w, _ = canvas.shape
    half_lo = -(width // 2)
    half_hi = width - width // 2
    for i in range(len(pts) - 1):
        x0, y0 = pts[i]
        x1, y1 = pts[i + 1]
        steps = int(max(abs(x1 - x0), abs(y1 - y0))) + 1
        ts = np.arange(steps + 1) / steps
        cx = np.rint(x0 + ts * (x1 - x0)).astype(np.int64)
        cy = np.rint(y0 + ts * (y1 - y0)).astype(np.int64)
        for oy in range(half_lo, half_hi):
            for ox in range(half_lo, half_hi):
                px = cx + ox
                py = cy + oy
                valid = (px >= 0) & (px < w) & (py >= 0) & (py < h)
                canvas[py[valid], px[valid]] = colors[i]


def fill_disk(canvas: np.ndarray, cx: int, cy: int, radius: int, color: np.ndarray) -> None:
    """Fill a disk of the given radius into a (H, W, 3) uint8 canvas, in place."""
    h, w, _ = canvas.shape
    y0 = max(cy - radius, 0)
    y1 = min(cy + radius + 1, h)
    x0 = max(cx - radius, 0)
    x1 = min(cx + radius + 1, w)
    if y0 >= y1 or x0 >= x1:
        return
    ys, xs = np.mgrid[y0:y1, x0:x1]
    mask = (ys - cy) ** 2 + (xs - cx) ** 2 <= radius * radius
    canvas[y0:y1, x0:x1][mask] = color
