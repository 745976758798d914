"""Numba-compiled hot kernels (default backend).

Same contracts as kernels_numpy; loops are written out so numba can compile
them without object-mode fallbacks. Padding is handled by bounds checks
instead of materializing padded arrays.
"""

from __future__ import annotations

import numba
import numpy as np
from numba import njit, prange


def conv_out_size(size: int, k: int, stride: int, pad: int) -> int:
    return (size + 2 * pad - k) // stride + 1


@njit(cache=True, parallel=True)
def _im2col(x, col, kh, kw, stride, pad):
    # NHWC layout: contiguous reads and writes, scalar loops vectorize well
    n, h, w, c = x.shape
    oh = (h + 2 * pad - kh) // stride + 1
    ow = (w + 2 * pad - kw) // stride + 1
    for b in prange(n):
        for oy in range(oh):
            for ox in range(ow):
                row = (b * oh + oy) * ow + ox
                sx0 = ox * stride - pad
                idx = 0
                for ky in range(kh):
                    sy = oy * stride + ky - pad
                    if sy < 0 or sy >= h:
                        for _ in range(kw * c):
                            col[row, idx] = 0.0
                            idx += 1
                        continue
                    for kx in range(kw):
                        sx = sx0 + kx
                        if sx < 0 or sx >= w:
                            for _ in range(c):
                                col[row, idx] = 0.0
                                idx += 1
                        else:
                            for ch in range(c):
                                col[row, idx] = x[b, sy, sx, ch]
                                idx += 1


def im2col(x: np.ndarray, kh: int, kw: int, stride: int, pad: int) -> np.ndarray:
    """(N, H, W, C) -> (N*OH*OW, kh*kw*C) patch matrix, zero-padded borders."""
    n, h, w, c = x.shape
    oh = conv_out_size(h, kh, stride, pad)
    ow = conv_out_size(w, kw, stride, pad)
    col = np.empty((n * oh * ow, kh * kw * c), dtype=x.dtype)
    _im2col(np.ascontiguousarray(x), col, kh, kw, stride, pad)
    return col


@njit(cache=True, parallel=True)
def _col2im(col, out, kh, kw, stride, pad):
    # parallel over batch: each element scatters into its own slab
    n, h, w, c = out.shape
    oh = (h + 2 * pad - kh) // stride + 1
    ow = (w + 2 * pad - kw) // stride + 1
    for b in prange(n):
        for oy in range(oh):
            for ox in range(ow):
                row = (b * oh + oy) * ow + ox
                sx0 = ox * stride - pad
                idx = 0
                for ky in range(kh):
                    sy = oy * stride + ky - pad
                    if sy < 0 or sy >= h:
                        idx += kw * c
                        continue
                    for kx in range(kw):
                        sx = sx0 + kx
                        if sx < 0 or sx >= w:
                            idx += c
                        else:
                            for ch in range(c):
                                out[b, sy, sx, ch] += col[row, idx]
                                idx += 1


def col2im(col: np.ndarray, n: int, h: int, w: int, c: int,
           kh: int, kw: int, stride: int, pad: int) -> np.ndarray:
    """Scatter-add transpose of im2col: (N*OH*OW, kh*kw*C) -> (N, H, W, C)."""
    out = np.zeros((n, h, w, c), dtype=col.dtype)
    _col2im(np.ascontiguousarray(col), out, kh, kw, stride, pad)
    return out


@njit(cache=True)
def _bilinear_warp(img, out, sx, sy):
    h, w, c = img.shape
    for y in range(h):
        for x in range(w):
            fx = sx[y, x]
            fy = sy[y, x]
            ix = int(np.floor(fx))
            iy = int(np.floor(fy))
            ax = fx - ix
            ay = fy - iy
            for ch in range(c):
                acc = 0.0
                for dy in range(2):
                    py = iy + dy
                    if py < 0 or py >= h:
                        continue
                    wy = ay if dy == 1 else 1.0 - ay
                    for dx in range(2):
                        px = ix + dx
                        if px < 0 or px >= w:
                            continue
                        wx = ax if dx == 1 else 1.0 - ax
                        acc += wy * wx * img[py, px, ch]
                out[y, x, ch] = acc


def affine_warp(img: np.ndarray, m: np.ndarray) -> np.ndarray:
    h, w, _ = img.shape
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    sx = m[0, 0] * xs + m[0, 1] * ys + m[0, 2]
    sy = m[1, 0] * xs + m[1, 1] * ys + m[1, 2]
    out = np.zeros_like(img)
    _bilinear_warp(img, out, sx, sy)
    return out


def grid_warp(img: np.ndarray, dx: np.ndarray, dy: np.ndarray) -> np.ndarray:
    h, w, _ = img.shape
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    out = np.zeros_like(img)
    _bilinear_warp(img, out, xs + dx, ys + dy)
    return out


@njit(cache=True, parallel=True)
def _affine_warp_batch(imgs, ms, out):
    n, h, w, c = imgs.shape
    for b in prange(n):
        for y in range(h):
            for x in range(w):
                fx = ms[b, 0, 0] * x + ms[b, 0, 1] * y + ms[b, 0, 2]
                fy = ms[b, 1, 0] * x + ms[b, 1, 1] * y + ms[b, 1, 2]
                ix = int(np.floor(fx))
                iy = int(np.floor(fy))
                ax = fx - ix
                ay = fy - iy
                for ch in range(c):
                    acc = 0.0
                    for dy in range(2):
                        py = iy + dy
                        if py < 0 or py >= h:
                            continue
                        wy = ay if dy == 1 else 1.0 - ay
                        for dx in range(2):
                            px = ix + dx
                            if px < 0 or px >= w:
                                continue
                            wx = ax if dx == 1 else 1.0 - ax
                            acc += wy * wx * imgs[b, py, px, ch]
                    out[b, y, x, ch] = acc


def affine_warp_batch(imgs: np.ndarray, ms: np.ndarray) -> np.ndarray:
    out = np.zeros_like(imgs)
    _affine_warp_batch(imgs, ms, out)
    return out


@njit(cache=True, parallel=True)
def _elastic_warp_batch(imgs, grids, out):
    n, h, w, c = imgs.shape
    g = grids.shape[2]
    sx_scale = (g - 1) / (w - 1)
    sy_scale = (g - 1) / (h - 1)
    for b in prange(n):
        for y in range(h):
            gy = y * sy_scale
            j0 = int(np.floor(gy))
            j1 = min(j0 + 1, g - 1)
            fyg = gy - j0
            for x in range(w):
                gx = x * sx_scale
                i0 = int(np.floor(gx))
                i1 = min(i0 + 1, g - 1)
                fxg = gx - i0
                dx = (grids[b, 0, j0, i0] * (1 - fyg) * (1 - fxg)
                      + grids[b, 0, j0, i1] * (1 - fyg) * fxg
                      + grids[b, 0, j1, i0] * fyg * (1 - fxg)
                      + grids[b, 0, j1, i1] * fyg * fxg)
                dy = (grids[b, 1, j0, i0] * (1 - fyg) * (1 - fxg)
                      + grids[b, 1, j0, i1] * (1 - fyg) * fxg
                      + grids[b, 1, j1, i0] * fyg * (1 - fxg)
                      + grids[b, 1, j1, i1] * fyg * fxg)
                fx = x + dx
                fy = y + dy
                ix = int(np.floor(fx))
                iy = int(np.floor(fy))
                ax = fx - ix
                ay = fy - iy
                for ch in range(c):
                    acc = 0.0
                    for ddy in range(2):
                        py = iy + ddy
                        if py < 0 or py >= h:
                            continue
                        wy = ay if ddy == 1 else 1.0 - ay
                        for ddx in range(2):
                            px = ix + ddx
                            if px < 0 or px >= w:
                                continue
                            wx = ax if ddx == 1 else 1.0 - ax
                            acc += wy * wx * imgs[b, py, px, ch]
                    out[b, y, x, ch] = acc


def elastic_warp_batch(imgs: np.ndarray, grids: np.ndarray) -> np.ndarray:
    """Warp each image by its coarse displacement grid, upsampled bilinearly."""
    out = np.zeros_like(imgs)
    _elastic_warp_batch(imgs, grids, out)
    return out


@njit(cache=True)
def _draw_polyline(canvas, pts, colors, width):
    h, w, _ = canvas.shape
    half_lo = -(width // 2)
    half_hi = width - width // 2
    for i in range(len(pts) - 1):
        x0 = pts[i, 0]
        y0 = pts[i, 1]
        x1 = pts[i + 1, 0]
        y1 = pts[i + 1, 1]
        steps = int(max(abs(x1 - x0), abs(y1 - y0))) + 1
        for s in range(steps + 1):
            t = s / steps
            cx = int(np.rint(x0 + t * (x1 - x0)))
            cy = int(np.rint(y0 + t * (y1 - y0)))
            for oy in range(half_lo, half_hi):
                py = cy + oy
                if py < 0 or py >= h:
                    continue
                for ox in range(half_lo, half_hi):
                    px = cx + ox
                    if px < 0 or px >= w:
                        continue
                    for ch in range(3):
                        canvas[py, px, ch] = colors[i, ch]


def draw_polyline(canvas: np.ndarray, pts: np.ndarray, colors: np.ndarray, width: int) -> None:
    _draw_polyline(canvas, np.ascontiguousarray(pts), np.ascontiguousarray(colors), width)


@njit(cache=True)
def _fill_disk(canvas, cx, cy, radius, color):
    h, w, _ = canvas.shape
    for oy in range(-radius, radius + 1):
        py = cy + oy
        if py < 0 or py >= h:
            continue
        for ox in range(-radius, radius + 1):
            px = cx + ox
            if px < 0 or px >= w:
                continue
            if ox * ox + oy * oy <= radius * radius:
                for ch in range(3):
                    canvas[py, px, ch] = color[ch]


def fill_disk(canvas: np.ndarray, cx: int, cy: int, radius: int, color: np.ndarray) -> None:
    _fill_disk(canvas, cx, cy, radius, np.ascontiguousarray(color))


def warmup() -> None:
    """Trigger JIT compilation of every kernel on tiny inputs."""
    x = np.zeros((1, 1, 4, 4), dtype=np.float32)
    col = im2col(x, 2, 2, 2, 1)
    col2im(col, 1, 1, 4, 4, 2, 2, 2, 1)
    img = np.zeros((4, 4, 3), dtype=np.float32)
    affine_warp(img, np.eye(2, 3))
    grid_warp(img, np.zeros((4, 4)), np.zeros((4, 4)))
    canvas = np.zeros((4, 4, 3), dtype=np.uint8)
    draw_polyline(canvas, np.array([[0.0, 0.0], [3.0, 3.0]]), np.zeros((1, 3), dtype=np.uint8), 1)
    fill_disk(canvas, 1, 1, 1, np.zeros(3, dtype=np.uint8))


_ = numba  # imported for availability detection by the backend selector
