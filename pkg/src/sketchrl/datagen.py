"""Synthetic play-trajectory data: dataset assembly and augmentation.

Records pair a 3D trajectory (uniformly resampled to n_tp points) with its
two canonical-view sketches. Two augmentation streams exist: sketch-only
transforms for representation robustness, and paired sketch+trajectory
perturbations that keep the pair consistent (trajectory noise is refit to a
smooth spline).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import geometry as geo
from . import spline
from .errors import ConfigError
from .neural.backend import kernels as K

DEFAULT_N_TP = 100


@dataclass(frozen=True)
class PlayConfig:
    """Random smooth workspace motions standing in for robot play data."""

    workspace: geo.Workspace
    waypoint_range: tuple = (4, 8)  # inclusive bounds on control-point count
    degree: int = 3
    n_dense: int = 400
    seed: int = 0

    def __post_init__(self):
        if self.waypoint_range[0] < self.degree + 1:
            raise ConfigError(
                f"waypoint_count must be >= degree + 1 = {self.degree + 1}"
            )
        if self.waypoint_range[1] < self.waypoint_range[0]:
            raise ConfigError("waypoint_range must be (lo, hi) with lo <= hi")


@dataclass(frozen=True)
class AugmentParams:
    """Magnitudes for both augmentation streams."""

    rotation_deg: float = 10.0
    scale_range: tuple = (0.9, 1.1)
    translate_px: float = 3.0
    noise_sigma: float = 8.0 / 255.0
    elastic_grid: int = 4
    elastic_amp_px: float = 2.0
    traj_sigma: float = 0.005  # meters

    @classmethod
    def identity(cls) -> "AugmentParams":
        return cls(rotation_deg=0.0, scale_range=(1.0, 1.0), translate_px=0.0,
                   noise_sigma=0.0, elastic_amp_px=0.0, traj_sigma=0.0)


@dataclass(frozen=True)
class DatasetRecord:
    sketch1: geo.SketchImage
    sketch2: geo.SketchImage
    trajectory: spline.Trajectory3D
    source_control_points: spline.ControlPoints | None = None


@dataclass
class DatasetManifest:
    name: str
    n: int
    seed: int
    n_tp: int
    image_size: int
    style_mode: str
    views: list
    workspace: list
    waypoint_range: list
    degree: int
    n_dense: int
    records: list = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(self.__dict__, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "DatasetManifest":
        return cls(**json.loads(text))


def generate_play_trajectory(cfg: PlayConfig, rng: np.random.Generator
                             ) -> tuple[spline.Trajectory3D, spline.ControlPoints]:
    """Sample uniform workspace waypoints as control points of a smooth spline."""
    k = int(rng.integers(cfg.waypoint_range[0], cfg.waypoint_range[1] + 1))
    ws = cfg.workspace
    ctrl = spline.ControlPoints(rng.uniform(ws.min, ws.max, size=(k, 3)))
    basis = spline.basis_matrix(spline.make_uniform_knots(k, cfg.degree), cfg.n_dense)
    return spline.interpolate(basis, ctrl), ctrl


def make_record(cfg: PlayConfig, rng: np.random.Generator, n_tp: int = DEFAULT_N_TP,
                style: geo.SketchStyle = geo.SketchStyle(),
                image_size: int = geo.DEFAULT_IMAGE_SIZE) -> DatasetRecord:
    dense, ctrl = generate_play_trajectory(cfg, rng)
    traj = spline.resample_uniform(dense, n_tp)
    s1, s2 = geo.render_sketch_pair(traj, cfg.workspace, style, image_size)
    return DatasetRecord(sketch1=s1, sketch2=s2, trajectory=traj, source_control_points=ctrl)


def record_rng(seed: int, index: int) -> np.random.Generator:
    """Independent per-record stream so serial and parallel builds agree."""
    return np.random.default_rng([seed, index])


def build_dataset(n: int, cfg: PlayConfig, style: geo.SketchStyle, out_dir,
                  name: str = "play", n_tp: int = DEFAULT_N_TP,
                  image_size: int = geo.DEFAULT_IMAGE_SIZE) -> DatasetManifest:
    """Write n records plus a manifest under out_dir/<name>/."""
    if n < 1:
        raise ConfigError(f"need n >= 1 records, got {n}")
    root = Path(out_dir) / name
    records_dir = root / "records"
    records_dir.mkdir(parents=True, exist_ok=True)
    manifest = DatasetManifest(
        name=name, n=n, seed=cfg.seed, n_tp=n_tp, image_size=image_size,
        style_mode=style.mode,
        views=[{"id": v.id, "axis_u": v.axis_u, "axis_v": v.axis_v,
                "flip_u": v.flip_u, "flip_v": v.flip_v} for v in geo.CANONICAL_VIEWS],
        workspace=[list(cfg.workspace.min), list(cfg.workspace.max)],
        waypoint_range=list(cfg.waypoint_range), degree=cfg.degree, n_dense=cfg.n_dense,
    )
    for i in range(n):
        rec = make_record(cfg, record_rng(cfg.seed, i), n_tp, style, image_size)
        rec_dir = records_dir / f"{i:05d}"
        rec_dir.mkdir(exist_ok=True)
        (rec_dir / "view1.png").write_bytes(rec.sketch1.to_png_bytes())
        (rec_dir / "view2.png").write_bytes(rec.sketch2.to_png_bytes())
        (rec_dir / "traj.json").write_text(rec.trajectory.to_json())
        manifest.records.append({"index": i, "dir": f"records/{i:05d}", "seed": [cfg.seed, i]})
    (root / "manifest.json").write_text(manifest.to_json())
    return manifest


@dataclass
class DatasetArrays:
    """In-memory dataset: uint8 sketches and float trajectories."""

    sketches1: np.ndarray  # (N, H, W, 3) uint8
    sketches2: np.ndarray
    trajectories: np.ndarray  # (N, n_tp, 3) float64
    workspace: geo.Workspace
    n_tp: int
    image_size: int
    style_mode: str = "markers"

    def __len__(self):
        return self.sketches1.shape[0]


def load_dataset(manifest_path) -> DatasetArrays:
    manifest_path = Path(manifest_path)
    manifest = DatasetManifest.from_json(manifest_path.read_text())
    root = manifest_path.parent
    s1, s2, trajs = [], [], []
    for rec in manifest.records:
        rec_dir = root / rec["dir"]
        s1.append(geo.SketchImage.from_png_bytes((rec_dir / "view1.png").read_bytes()).pixels)
        s2.append(geo.SketchImage.from_png_bytes((rec_dir / "view2.png").read_bytes()).pixels)
        trajs.append(spline.Trajectory3D.from_json((rec_dir / "traj.json").read_text()).points)
    ws = geo.Workspace(min=np.array(manifest.workspace[0]), max=np.array(manifest.workspace[1]))
    return DatasetArrays(
        sketches1=np.stack(s1), sketches2=np.stack(s2), trajectories=np.stack(trajs),
        workspace=ws, n_tp=manifest.n_tp, image_size=manifest.image_size,
        style_mode=manifest.style_mode,
    )


def records_from_arrays(data: DatasetArrays, indices=None) -> list[DatasetRecord]:
    idx = range(len(data)) if indices is None else indices
    return [DatasetRecord(sketch1=geo.SketchImage(data.sketches1[i]),
                          sketch2=geo.SketchImage(data.sketches2[i]),
                          trajectory=spline.Trajectory3D(data.trajectories[i]))
            for i in idx]


# ---- augmentation -----------------------------------------------------------

def _inverse_affine(size: int, angle_rad: float, scl: float, tx: float, ty: float) -> np.ndarray:
    """Inverse map (output px -> source px) for rotate/scale about center + shift."""
    c = (size - 1) / 2.0
    cos, sin = np.cos(angle_rad), np.sin(angle_rad)
    # forward: out = s * R @ (src - c) + c + t; inverted below
    inv = np.array([[cos, sin], [-sin, cos]]) / scl
    m = np.zeros((2, 3))
    m[:, :2] = inv
    m[:, 2] = -inv @ np.array([c + tx, c + ty]) + c
    return m


def augment_sketch(img: geo.SketchImage, rng: np.random.Generator,
                   params: AugmentParams = AugmentParams()) -> geo.SketchImage:
    """Random rotation/scale/translation plus channel noise (sketch-only stream)."""
    angle = np.deg2rad(rng.uniform(-params.rotation_deg, params.rotation_deg))
    scl = rng.uniform(params.scale_range[0], params.scale_range[1])
    tx = rng.uniform(-params.translate_px, params.translate_px)
    ty = rng.uniform(-params.translate_px, params.translate_px)
    data = img.pixels.astype(np.float32) / 255.0
    if angle != 0.0 or scl != 1.0 or tx != 0.0 or ty != 0.0:
        data = K.affine_warp(data, _inverse_affine(img.size, angle, scl, tx, ty))
    if params.noise_sigma > 0.0:
        data = data + params.noise_sigma * rng.standard_normal(data.shape, dtype=np.float32)
    return geo.SketchImage(np.clip(np.rint(data * 255.0), 0, 255).astype(np.uint8))


def _elastic_field(size: int, grid: int, amp: float, rng: np.random.Generator) -> tuple:
    """Coarse random displacement grid bilinearly upsampled to pixel resolution."""
    disp = rng.uniform(-amp, amp, size=(2, grid, grid))
    coords = np.linspace(0, grid - 1, size)
    i0 = np.floor(coords).astype(int)
    i1 = np.minimum(i0 + 1, grid - 1)
    f = coords - i0
    fields = []
    for d in disp:
        rows = d[i0][:, i0] * np.outer(1 - f, 1 - f) + d[i0][:, i1] * np.outer(1 - f, f) \
            + d[i1][:, i0] * np.outer(f, 1 - f) + d[i1][:, i1] * np.outer(f, f)
        fields.append(rows)
    return fields[0], fields[1]


def _elastic_noise_sketch(img: geo.SketchImage, rng: np.random.Generator,
                          params: AugmentParams) -> geo.SketchImage:
    data = img.pixels.astype(np.float32) / 255.0
    if params.elastic_amp_px > 0.0:
        dx, dy = _elastic_field(img.size, params.elastic_grid, params.elastic_amp_px, rng)
        data = K.grid_warp(data, dx, dy)
    if params.noise_sigma > 0.0:
        data = data + params.noise_sigma * rng.standard_normal(data.shape, dtype=np.float32)
    return geo.SketchImage(np.clip(np.rint(data * 255.0), 0, 255).astype(np.uint8))


def perturb_and_refit(traj: spline.Trajectory3D, rng: np.random.Generator, sigma: float,
                      ws: geo.Workspace | None = None, n_cp: int = spline.DEFAULT_N_CP,
                      degree: int = spline.DEFAULT_DEGREE, n_dense: int = 400
                      ) -> spline.Trajectory3D:
    """Point-wise noise, then refit so the result stays a smooth spline."""
    n_tp = len(traj)
    noised = traj.points + rng.normal(0.0, sigma, size=traj.points.shape)
    fitted = spline.fit_control_points(spline.Trajectory3D(noised), n_cp, degree)
    pts = fitted.points
    if ws is not None:
        pts = np.clip(pts, ws.min, ws.max)  # hull containment keeps the curve inside
    basis = spline.cached_basis(n_cp, degree, n_dense)
    dense = spline.interpolate(basis, spline.ControlPoints(pts))
    return spline.resample_uniform(dense, n_tp)


def augment_pair(rec: DatasetRecord, rng: np.random.Generator,
                 params: AugmentParams = AugmentParams(),
                 ws: geo.Workspace | None = None) -> DatasetRecord:
    """Paired stream: elastic+noise sketches, noise-with-refit trajectory."""
    s1 = _elastic_noise_sketch(rec.sketch1, rng, params)
    s2 = _elastic_noise_sketch(rec.sketch2, rng, params)
    if params.traj_sigma > 0.0:
        traj = perturb_and_refit(rec.trajectory, rng, params.traj_sigma, ws)
    else:
        traj = rec.trajectory
    return replace(rec, sketch1=s1, sketch2=s2, trajectory=traj)


def augment_sketch_batch(images: np.ndarray, rng: np.random.Generator,
                         params: AugmentParams = AugmentParams(),
                         quantize: bool = True) -> np.ndarray:
    """Batched augment_sketch: same per-image rng draw order, one warp kernel call.

    With quantize=False the float image is returned directly (training fast
    path); pixel values differ from the quantized result by at most 0.5/255.
    """
    n, size = images.shape[0], images.shape[1]
    identity_affine = (params.rotation_deg == 0.0 and params.translate_px == 0.0
                       and params.scale_range == (1.0, 1.0))
    ms = np.empty((n, 2, 3))
    noises = None
    if params.noise_sigma > 0.0:
        noises = np.empty(images.shape, dtype=np.float32)
    for i in range(n):
        angle = np.deg2rad(rng.uniform(-params.rotation_deg, params.rotation_deg))
        scl = rng.uniform(params.scale_range[0], params.scale_range[1])
        tx = rng.uniform(-params.translate_px, params.translate_px)
        ty = rng.uniform(-params.translate_px, params.translate_px)
        ms[i] = _inverse_affine(size, angle, scl, tx, ty)
        if noises is not None:
            noises[i] = params.noise_sigma * rng.standard_normal(images.shape[1:],
                                                                  dtype=np.float32)
    data = images.astype(np.float32) / 255.0
    if not identity_affine:
        data = K.affine_warp_batch(data, ms)
    if noises is not None:
        data = data + noises
    if not quantize:
        return np.clip(data, 0.0, 1.0)
    return np.clip(np.rint(data * 255.0), 0, 255).astype(np.uint8)


def augment_pair_batch(sketches1: np.ndarray, sketches2: np.ndarray,
                       trajectories: np.ndarray, rng: np.random.Generator,
                       params: AugmentParams = AugmentParams(),
                       ws: geo.Workspace | None = None,
                       quantize: bool = True) -> tuple:
    """Batched augment_pair over stacked record arrays."""
    n, size = sketches1.shape[0], sketches1.shape[1]
    g = params.elastic_grid
    grids = np.zeros((2 * n, 2, g, g))
    noises = np.zeros((2 * n,) + sketches1.shape[1:], dtype=np.float32) \
        if params.noise_sigma > 0.0 else None
    traj_noise = np.zeros_like(trajectories)
    for i in range(n):
        for v in range(2):
            if params.elastic_amp_px > 0.0:
                grids[2 * i + v] = rng.uniform(-params.elastic_amp_px,
                                               params.elastic_amp_px, size=(2, g, g))
            if noises is not None:
                noises[2 * i + v] = params.noise_sigma * rng.standard_normal(
                    sketches1.shape[1:], dtype=np.float32)
        if params.traj_sigma > 0.0:
            traj_noise[i] = rng.normal(0.0, params.traj_sigma,
                                       size=trajectories.shape[1:])
    stacked = np.empty((2 * n,) + sketches1.shape[1:], dtype=np.float32)
    stacked[0::2] = sketches1.astype(np.float32) / 255.0
    stacked[1::2] = sketches2.astype(np.float32) / 255.0
    if params.elastic_amp_px > 0.0:
        stacked = K.elastic_warp_batch(stacked, grids)
    if noises is not None:
        stacked = stacked + noises
    if quantize:
        out_u8 = np.clip(np.rint(stacked * 255.0), 0, 255).astype(np.uint8)
    else:
        out_u8 = np.clip(stacked, 0.0, 1.0)
    out_trajs = trajectories
    if params.traj_sigma > 0.0:
        out_trajs = np.empty_like(trajectories)
        n_tp = trajectories.shape[1]
        basis = spline.cached_basis(spline.DEFAULT_N_CP, spline.DEFAULT_DEGREE, 400)
        for i in range(n):
            noised = spline.Trajectory3D(trajectories[i] + traj_noise[i])
            fitted = spline.fit_control_points(noised)
            pts = fitted.points
            if ws is not None:
                pts = np.clip(pts, ws.min, ws.max)
            dense = spline.interpolate(basis, spline.ControlPoints(pts))
            out_trajs[i] = spline.resample_uniform(dense, n_tp).points
    return out_u8[0::2], out_u8[1::2], out_trajs


def intent_trajectory(waypoints: np.ndarray, rng: np.random.Generator,
                      wiggle: float = 0.01, points_per_leg: int = 3,
                      n_dense: int = 400) -> spline.Trajectory3D:
    """Smooth trajectory through coarse waypoints, the way a sketch would be drawn.

    Intermediate control points are linear blends between waypoints with small
    random offsets; endpoints are hit exactly (clamped spline).
    """
    wps = np.asarray(waypoints, dtype=np.float64)
    ctrl = [wps[0]]
    for a, b in zip(wps[:-1], wps[1:]):
        for j in range(1, points_per_leg + 1):
            t = j / (points_per_leg + 1)
            ctrl.append(a + t * (b - a) + rng.normal(0.0, wiggle, size=3))
        ctrl.append(b)
    ctrl = np.asarray(ctrl)
    n_cp = len(ctrl)
    basis = spline.basis_matrix(spline.make_uniform_knots(n_cp, 3), n_dense)
    return spline.interpolate(basis, spline.ControlPoints(ctrl))
