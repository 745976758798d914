"""Workspace geometry: orthographic dual-view projection of 3D trajectories
and rasterization of 2D polylines into sketch images."""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np
from PIL import Image

from .errors import ConfigError, EmptySketchError, ShapeError
from .neural.backend import kernels as K
from .spline import Trajectory3D

DEFAULT_IMAGE_SIZE = 64

GREEN = np.array([0, 255, 0], dtype=np.uint8)
RED = np.array([255, 0, 0], dtype=np.uint8)
YELLOW = np.array([255, 255, 0], dtype=np.uint8)


@dataclass(frozen=True)
class Workspace:
    """Axis-aligned workspace box in meters."""

    min: np.ndarray
    max: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.min, dtype=np.float64)
        hi = np.asarray(self.max, dtype=np.float64)
        if lo.shape != (3,) or hi.shape != (3,):
            raise ShapeError("workspace bounds must be 3-vectors")
        if not np.all(lo < hi):
            raise ConfigError("workspace min must be < max component-wise")
        object.__setattr__(self, "min", lo)
        object.__setattr__(self, "max", hi)

    @property
    def extent(self) -> np.ndarray:
        return self.max - self.min

    def contains(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(points)
        return np.all((pts >= self.min) & (pts <= self.max), axis=1)


@dataclass(frozen=True)
class CameraView:
    """Orthographic view: which workspace axes map to image columns/rows."""

    id: str
    axis_u: int
    axis_v: int
    flip_u: bool = False
    flip_v: bool = True  # workspace +z points up, image rows grow downward
    image_size: tuple = (DEFAULT_IMAGE_SIZE, DEFAULT_IMAGE_SIZE)

    def __post_init__(self):
        if self.axis_u == self.axis_v:
            raise ConfigError("axis_u and axis_v must differ")


# the two canonical orthogonal views the generator is trained on
FRONT_VIEW = CameraView(id="view1", axis_u=0, axis_v=2)
SIDE_VIEW = CameraView(id="view2", axis_u=1, axis_v=2)
CANONICAL_VIEWS = (FRONT_VIEW, SIDE_VIEW)


@dataclass(frozen=True)
class SketchStyle:
    """How a polyline is drawn: endpoint markers or a time color gradient."""

    mode: str = "markers"  # markers | gradient
    marker_radius: int = 2  # pixels at 64x64, scales with image size
    line_width: int = 1

    def __post_init__(self):
        if self.mode not in ("markers", "gradient"):
            raise ConfigError(f"unknown sketch style mode {self.mode!r}")


@dataclass(frozen=True)
class SketchImage:
    """H x W x 3 uint8 raster with a black background."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 3 or px.shape[2] != 3 or px.dtype != np.uint8:
            raise ShapeError(f"sketch image must be (H, W, 3) uint8, got {px.shape} {px.dtype}")
        if px.shape[0] != px.shape[1]:
            raise ShapeError("sketch images are square")
        object.__setattr__(self, "pixels", px)

    @property
    def size(self) -> int:
        return self.pixels.shape[0]

    def to_float(self) -> np.ndarray:
        """(H, W, 3) float32 in [0, 1] for the neural boundary."""
        return self.pixels.astype(np.float32) / 255.0

    @classmethod
    def from_float(cls, data: np.ndarray) -> "SketchImage":
        px = np.clip(np.asarray(data), 0.0, 1.0)
        if px.ndim == 3 and px.shape[0] == 3:
            px = px.transpose(1, 2, 0)
        return cls((px * 255.0).round().astype(np.uint8))

    def to_png_bytes(self) -> bytes:
        buf = io.BytesIO()
        Image.fromarray(self.pixels).save(buf, format="PNG")
        return buf.getvalue()

    @classmethod
    def from_png_bytes(cls, raw: bytes) -> "SketchImage":
        img = Image.open(io.BytesIO(raw)).convert("RGB")
        return cls(np.asarray(img, dtype=np.uint8))


@dataclass(frozen=True)
class Polyline2D:
    """Ordered (u, v) points in normalized [0, 1]^2 image coordinates."""

    points: np.ndarray
    clamped: bool = False  # set when projection had to clamp out-of-workspace points

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
            raise ShapeError(f"polyline must be (n>=2, 2), got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ShapeError("polyline contains non-finite points")
        object.__setattr__(self, "points", pts)


def project(traj: Trajectory3D, view: CameraView, ws: Workspace) -> Polyline2D:
    """Drop the view's depth axis and min-max normalize against the workspace.

    Points outside the workspace are clamped into [0, 1] and the polyline is
    flagged rather than rejected, so noisy inputs never abort generation.
    """
    pts = traj.points
    u = (pts[:, view.axis_u] - ws.min[view.axis_u]) / ws.extent[view.axis_u]
    v = (pts[:, view.axis_v] - ws.min[view.axis_v]) / ws.extent[view.axis_v]
    if view.flip_u:
        u = 1.0 - u
    if view.flip_v:
        v = 1.0 - v
    uv = np.stack([u, v], axis=1)
    clamped = bool(np.any((uv < 0.0) | (uv > 1.0)))
    return Polyline2D(np.clip(uv, 0.0, 1.0), clamped=clamped)


def _to_pixels(points: np.ndarray, size: int) -> np.ndarray:
    return points * (size - 1)


def rasterize(poly: Polyline2D, style: SketchStyle = SketchStyle(),
              size: int = DEFAULT_IMAGE_SIZE) -> SketchImage:
    """Draw a polyline into a fresh black canvas.

    markers mode: yellow line, then a green start disk and a red end disk on
    top. gradient mode: each segment colored green->red by the normalized
    arc time at its midpoint, no endpoint disks.
    """
    if size < 8:
        raise ConfigError(f"image size must be >= 8, got {size}")
    canvas = np.zeros((size, size, 3), dtype=np.uint8)
    pts = _to_pixels(poly.points, size)
    n_seg = len(pts) - 1
    width = max(1, round(style.line_width * size / DEFAULT_IMAGE_SIZE))

    if style.mode == "markers":
        colors = np.tile(YELLOW, (n_seg, 1))
    else:
        seg_len = np.linalg.norm(np.diff(poly.points, axis=0), axis=1)
        total = seg_len.sum()
        if total > 0:
            cum = np.concatenate([[0.0], np.cumsum(seg_len)])
            mid_t = (cum[:-1] + cum[1:]) / (2.0 * total)
        else:
            mid_t = np.zeros(n_seg)
        colors = np.stack([
            np.round(255 * mid_t),
            np.round(255 * (1.0 - mid_t)),
            np.zeros(n_seg),
        ], axis=1).astype(np.uint8)

    K.draw_polyline(canvas, pts, colors, width)

    if style.mode == "markers":
        radius = max(1, round(style.marker_radius * size / DEFAULT_IMAGE_SIZE))
        start = np.rint(pts[0]).astype(int)
        end = np.rint(pts[-1]).astype(int)
        K.fill_disk(canvas, int(start[0]), int(start[1]), radius, GREEN)
        K.fill_disk(canvas, int(end[0]), int(end[1]), radius, RED)
    return SketchImage(canvas)


def strokes_to_polyline(strokes: list) -> Polyline2D:
    """Normalize freehand UI input into a single polyline.

    Strokes are concatenated in draw order, consecutive duplicates removed,
    and interior points smoothed with a 3-point moving average. Coordinates
    are clipped into [0, 1].
    """
    chains = [np.asarray(s, dtype=np.float64) for s in strokes if len(s) > 0]
    if not chains:
        raise EmptySketchError("no strokes provided")
    pts = np.concatenate(chains, axis=0)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ShapeError(f"stroke points must be (n, 2), got {pts.shape}")
    keep = np.ones(len(pts), dtype=bool)
    keep[1:] = np.any(np.diff(pts, axis=0) != 0.0, axis=1)
    pts = pts[keep]
    if len(pts) < 2:
        raise EmptySketchError("need at least 2 distinct stroke points")
    if len(pts) > 2:
        smoothed = pts.copy()
        smoothed[1:-1] = (pts[:-2] + pts[1:-1] + pts[2:]) / 3.0
        pts = smoothed
    return Polyline2D(np.clip(pts, 0.0, 1.0))


def render_sketch_pair(traj: Trajectory3D, ws: Workspace,
                       style: SketchStyle = SketchStyle(),
                       size: int = DEFAULT_IMAGE_SIZE) -> tuple[SketchImage, SketchImage]:
    """The canonical dual-view sketch rendering used across the pipeline."""
    return tuple(rasterize(project(traj, view, ws), style, size) for view in CANONICAL_VIEWS)
