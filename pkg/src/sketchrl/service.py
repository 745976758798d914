"""HTTP service consumed by the sketch-pad UI.

Model weights load once and are shared read-only across requests; the run
registry is the only mutable state, guarded by a lock, with at most one RL
training run in flight per service instance.
"""

from __future__ import annotations

import base64
import threading
import uuid
from dataclasses import asdict

import numpy as np
from fastapi import FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from . import demos, envs, generator as gen, geometry as geo, policy, spline
from .errors import SketchRLError


class GenerateRequest(BaseModel):
    view1_png: str | None = None  # base64 PNG
    view2_png: str | None = None
    strokes1: list[list[list[float]]] | None = None  # normalized [u, v] points
    strokes2: list[list[list[float]]] | None = None
    m: int = Field(default=1, ge=1)
    noise_scale: float | None = Field(default=None, ge=0.0)
    seed: int = 0


class CollectRequest(BaseModel):
    task: str
    trajectories: list[list[list[float]]]
    scene: dict | None = None
    seed: int = 0
    randomization_level: float = 1.0


class TrainBCRequest(BaseModel):
    demoset_id: str
    epochs: int = Field(default=300, ge=1)
    seed: int = 0


class TrainRLRequest(BaseModel):
    task: str
    demoset_id: str | None = None
    steps: int = Field(default=30_000, ge=0)
    lam: float = Field(default=0.05, ge=0.0)
    m: int = Field(default=3, ge=1)
    n_sketches: int = Field(default=3, ge=1)
    seed: int = 0
    use_bc: bool = True
    eval_interval: int = Field(default=1000, ge=1)
    eval_episodes: int = Field(default=10, ge=1)


def _png_b64(img: geo.SketchImage) -> str:
    return base64.b64encode(img.to_png_bytes()).decode()


def _decode_png(b64: str) -> geo.SketchImage:
    try:
        return geo.SketchImage.from_png_bytes(base64.b64decode(b64))
    except Exception as exc:
        raise HTTPException(status_code=400, detail=f"bad PNG payload: {exc}") from exc


class RunRegistry:
    def __init__(self):
        self._lock = threading.Lock()
        self._runs: dict[str, dict] = {}
        self._demosets: dict[str, demos.DemoSet] = {}
        self._bc: dict[str, policy.BCPolicy] = {}
        self.rl_active = False

    def new_run(self, kind: str) -> str:
        run_id = uuid.uuid4().hex[:12]
        with self._lock:
            self._runs[run_id] = {"id": run_id, "kind": kind, "state": "running",
                                  "curve": [], "result": None, "error": None}
        return run_id

    def update(self, run_id: str, **fields) -> None:
        with self._lock:
            self._runs[run_id].update(fields)

    def append_curve(self, run_id: str, row: dict) -> None:
        with self._lock:
            self._runs[run_id]["curve"].append(row)

    def get(self, run_id: str) -> dict | None:
        with self._lock:
            run = self._runs.get(run_id)
            return None if run is None else dict(run, curve=list(run["curve"]))

    def store_demoset(self, ds: demos.DemoSet) -> str:
        ds_id = uuid.uuid4().hex[:12]
        with self._lock:
            self._demosets[ds_id] = ds
        return ds_id

    def demoset(self, ds_id: str) -> demos.DemoSet | None:
        with self._lock:
            return self._demosets.get(ds_id)

    def store_bc(self, run_id: str, bc: policy.BCPolicy) -> None:
        with self._lock:
            self._bc[run_id] = bc

    def bc_for(self, run_id: str) -> policy.BCPolicy | None:
        with self._lock:
            return self._bc.get(run_id)


def create_app(model_prefix, out_root="runs", frontend_dir=None) -> FastAPI:
    model = gen.load_generator(model_prefix)
    style = geo.SketchStyle(mode=model.hp.style_mode)
    registry = RunRegistry()
    app = FastAPI(title="sketchrl service")
    app.state.registry = registry
    app.state.model = model

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400,
                            content={"code": 400, "message": str(exc.errors()[:3])})

    @app.exception_handler(SketchRLError)
    async def domain_handler(request: Request, exc: SketchRLError):
        return JSONResponse(status_code=400, content={"code": 400, "message": str(exc)})

    @app.exception_handler(HTTPException)
    async def http_handler(request: Request, exc: HTTPException):
        return JSONResponse(status_code=exc.status_code,
                            content={"code": exc.status_code, "message": str(exc.detail)})

    @app.get("/api/scene/{task}/views")
    def scene_views(task: str, seed: int = 0, level: float = 1.0, size: int = 256):
        if task not in envs.TASKS:
            raise HTTPException(status_code=404, detail=f"unknown task {task!r}")
        env = envs.make_env(task)
        state = env.reset(level, np.random.default_rng(seed))
        img1, img2 = env.render_views(size=size)
        return {
            "task": task,
            "scene": state.to_dict(),
            "view1_png": _png_b64(img1),
            "view2_png": _png_b64(img2),
            "cameras": [{"id": v.id, "axis_u": v.axis_u, "axis_v": v.axis_v,
                         "flip_u": v.flip_u, "flip_v": v.flip_v}
                        for v in geo.CANONICAL_VIEWS],
            "workspace": [list(env.ws.min), list(env.ws.max)],
        }

    def _sketch_from(png_b64, strokes, view_name: str) -> geo.SketchImage:
        if png_b64 is not None:
            img = _decode_png(png_b64)
            if img.size != model.hp.image_size:
                raise HTTPException(status_code=400,
                                    detail=f"{view_name}: expected "
                                           f"{model.hp.image_size}px sketches, got {img.size}")
            return img
        if strokes is not None:
            poly = geo.strokes_to_polyline(strokes)
            return geo.rasterize(poly, style, model.hp.image_size)
        raise HTTPException(status_code=400,
                            detail=f"{view_name}: provide a PNG or stroke list")

    @app.post("/api/generate")
    def generate(req: GenerateRequest):
        img1 = _sketch_from(req.view1_png, req.strokes1, "view1")
        img2 = _sketch_from(req.view2_png, req.strokes2, "view2")
        rng = np.random.default_rng(req.seed)
        trajs = gen.sample_trajectories(model, img1, img2, req.m, req.noise_scale, rng)
        out = gen.forward(model, img1, img2)  # deterministic reconstructions
        ws = model.workspace
        overlays = {}
        if ws is not None:
            for view in geo.CANONICAL_VIEWS:
                overlays[view.id] = [geo.project(t, view, ws).points.tolist()
                                     for t in trajs]
        return {
            "trajectories": [t.points.tolist() for t in trajs],
            "recon1_png": _png_b64(out.recon1) if out.recon1 else None,
            "recon2_png": _png_b64(out.recon2) if out.recon2 else None,
            "input1_png": _png_b64(img1),
            "input2_png": _png_b64(img2),
            "overlays": overlays,
            "n_tp": model.hp.n_tp,
        }

    @app.post("/api/demos/collect")
    def collect(req: CollectRequest):
        if req.task not in envs.TASKS:
            raise HTTPException(status_code=404, detail=f"unknown task {req.task!r}")
        env = envs.make_env(req.task)
        try:
            trajs = [spline.Trajectory3D(np.asarray(t)) for t in req.trajectories]
        except SketchRLError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        cfg = demos.ServoConfig() if req.task != "push" else \
            demos.ServoConfig(gripper_schedule="close_at_closest_approach")
        scenes = None
        if req.scene is not None:
            scenes = [envs.EnvState.from_dict(req.scene)] * len(trajs)
        ds = demos.collect(env, trajs, cfg, scenes=scenes,
                           randomization_level=req.randomization_level,
                           rng=np.random.default_rng(req.seed))
        ds_id = registry.store_demoset(ds)
        return {"demoset_id": ds_id, "count": len(ds),
                "success_rate": ds.success_rate(),
                "successes": int(round(ds.success_rate() * len(ds))),
                "mean_length": ds.mean_length()}

    @app.post("/api/train/bc")
    def train_bc(req: TrainBCRequest):
        ds = registry.demoset(req.demoset_id)
        if ds is None:
            raise HTTPException(status_code=404, detail=f"no demo set {req.demoset_id!r}")
        env = envs.make_env(ds.task)
        run_id = registry.new_run("bc")

        def job():
            try:
                bc, history = policy.bc_train(
                    ds, env.observation_dim, env.action_dim,
                    policy.BCTrainConfig(epochs=req.epochs),
                    rng=np.random.default_rng(req.seed))
                registry.store_bc(run_id, bc)
                registry.update(run_id, state="done",
                                result={"final_loss": history[-1], "epochs": req.epochs})
            except Exception as exc:
                registry.update(run_id, state="error", error=str(exc))

        threading.Thread(target=job, daemon=True).start()
        return {"run_id": run_id}

    @app.post("/api/train/rl")
    def train_rl(req: TrainRLRequest):
        if req.task not in envs.TASKS:
            raise HTTPException(status_code=404, detail=f"unknown task {req.task!r}")
        with registry._lock:
            if registry.rl_active:
                raise HTTPException(status_code=409,
                                    detail="an RL run is already in progress")
            registry.rl_active = True
        ds = registry.demoset(req.demoset_id) if req.demoset_id else None
        run_id = registry.new_run("rl")
        hp = policy.RLHyperparams(lam=req.lam, m=req.m, n_sketches=req.n_sketches,
                                  total_steps=req.steps, eval_interval=req.eval_interval,
                                  eval_episodes=req.eval_episodes, seed=req.seed)

        def job():
            try:
                env = envs.make_env(req.task)
                bc = None
                if req.use_bc and ds is not None:
                    bc, _ = policy.bc_train(ds, env.observation_dim, env.action_dim,
                                            rng=np.random.default_rng(req.seed))
                result = policy.train(env, bc, ds, hp,
                                      np.random.default_rng(req.seed),
                                      log_fn=lambda row: registry.append_curve(run_id, row))
                registry.update(run_id, state="done",
                                result={"final_success": result.curve[-1]["eval_success"]})
            except Exception as exc:
                registry.update(run_id, state="error", error=str(exc))
            finally:
                registry.rl_active = False

        threading.Thread(target=job, daemon=True).start()
        return {"run_id": run_id}

    @app.get("/api/runs/{run_id}/status")
    def run_status(run_id: str):
        run = registry.get(run_id)
        if run is None:
            raise HTTPException(status_code=404, detail=f"no run {run_id!r}")
        return run

    if frontend_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=frontend_dir, html=True), name="frontend")
    return app
