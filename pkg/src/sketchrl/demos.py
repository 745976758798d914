"""Demonstration generation: open-loop servoing of generated trajectories.

A proportional controller tracks the trajectory waypoints in order; every
transition is recorded with the environment's sparse reward. Failed or
suboptimal executions are kept — they still carry useful guidance.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import datagen, generator as gen, geometry as geo, spline
from .envs import Env, EnvState
from .errors import ConfigError

GRIPPER_SCHEDULES = ("always_closed", "close_at_closest_approach")


@dataclass(frozen=True)
class ServoConfig:
    gain: float = 1.0
    tolerance: float = 0.01  # meters
    per_waypoint_budget: int = 10
    max_steps: int | None = None  # defaults to the env horizon
    gripper_schedule: str = "always_closed"
    close_radius: float | None = None  # defaults to the env grasp radius

    def __post_init__(self):
        if self.gain <= 0:
            raise ConfigError("servo gain must be > 0")
        if self.gripper_schedule not in GRIPPER_SCHEDULES:
            raise ConfigError(f"gripper_schedule must be one of {GRIPPER_SCHEDULES}")


@dataclass
class Transition:
    p: np.ndarray
    o: np.ndarray
    a: np.ndarray
    r: float
    p_next: np.ndarray
    o_next: np.ndarray
    done: bool


@dataclass
class Demonstration:
    transitions: list
    task: str
    trajectory_id: int
    success: bool
    completed: bool  # consumed every waypoint

    def __len__(self):
        return len(self.transitions)

    def positions(self) -> np.ndarray:
        pts = [t.p for t in self.transitions]
        pts.append(self.transitions[-1].p_next)
        return np.stack(pts)


@dataclass
class DemoSet:
    demos: list
    task: str
    config: ServoConfig

    def __len__(self):
        return len(self.demos)

    def success_rate(self) -> float:
        if not self.demos:
            return 0.0
        return float(np.mean([d.success for d in self.demos]))

    def mean_length(self) -> float:
        if not self.demos:
            return 0.0
        return float(np.mean([len(d) for d in self.demos]))

    def all_transitions(self) -> list:
        return [t for d in self.demos for t in d.transitions]

    def arrays(self) -> dict:
        """Stacked transition arrays for learners."""
        ts = self.all_transitions()
        return {
            "p": np.stack([t.p for t in ts]).astype(np.float32),
            "o": np.stack([t.o for t in ts]).astype(np.float32),
            "a": np.stack([t.a for t in ts]).astype(np.float32),
            "r": np.array([t.r for t in ts], dtype=np.float32),
            "p_next": np.stack([t.p_next for t in ts]).astype(np.float32),
            "o_next": np.stack([t.o_next for t in ts]).astype(np.float32),
            "done": np.array([t.done for t in ts], dtype=np.float32),
        }

    def to_jsonl(self, path) -> None:
        with open(path, "w") as fh:
            header = {
                "kind": "header",
                "task": self.task,
                "config": self.config.__dict__,
                "trajectory_ids": [d.trajectory_id for d in self.demos],
                "successes": [d.success for d in self.demos],
                "completed": [d.completed for d in self.demos],
            }
            fh.write(json.dumps(header) + "\n")
            for i, demo in enumerate(self.demos):
                for t in demo.transitions:
                    fh.write(json.dumps({
                        "kind": "transition", "demo": i,
                        "p": [float(v) for v in t.p], "o": [float(v) for v in t.o],
                        "a": [float(v) for v in t.a], "r": t.r,
                        "p_next": [float(v) for v in t.p_next],
                        "o_next": [float(v) for v in t.o_next], "done": t.done,
                    }) + "\n")

    @classmethod
    def from_jsonl(cls, path) -> "DemoSet":
        lines = Path(path).read_text().splitlines()
        header = json.loads(lines[0])
        if header.get("kind") != "header":
            raise ConfigError(f"{path}: missing demo-set header line")
        cfg = ServoConfig(**header["config"])
        per_demo: dict[int, list] = {i: [] for i in range(len(header["trajectory_ids"]))}
        for line in lines[1:]:
            raw = json.loads(line)
            per_demo[raw["demo"]].append(Transition(
                p=np.array(raw["p"]), o=np.array(raw["o"], dtype=np.float32),
                a=np.array(raw["a"], dtype=np.float32), r=float(raw["r"]),
                p_next=np.array(raw["p_next"]),
                o_next=np.array(raw["o_next"], dtype=np.float32), done=bool(raw["done"])))
        demos = [Demonstration(transitions=per_demo[i], task=header["task"],
                               trajectory_id=header["trajectory_ids"][i],
                               success=header["successes"][i],
                               completed=header["completed"][i])
                 for i in range(len(per_demo))]
        return cls(demos=demos, task=header["task"], config=cfg)


def servo(env: Env, traj: spline.Trajectory3D, cfg: ServoConfig = ServoConfig(),
          trajectory_id: int = 0) -> Demonstration:
    """Track the trajectory's waypoints with proportional position commands.

    The environment must already be reset to the scene the trajectory was
    generated for. Every transition is recorded; episodes that fail still
    yield a demonstration.
    """
    if env.state is None or env.state.done:
        raise ConfigError("reset the environment before servoing")
    waypoints = np.clip(traj.points, env.ws.min, env.ws.max)
    max_step = env.config.max_step
    max_steps = cfg.max_steps if cfg.max_steps is not None else env.config.horizon
    close_radius = cfg.close_radius
    if close_radius is None:
        close_radius = getattr(env.config, "grasp_radius", 0.03)

    transitions = []
    idx = 0
    steps_on_wp = 0
    gripper_closed = cfg.gripper_schedule == "always_closed"
    n_wp = len(waypoints)
    steps = 0
    while idx < n_wp and steps < max_steps and not env.state.done:
        ee = env.state.ee_pos.copy()
        while idx < n_wp and np.linalg.norm(waypoints[idx] - ee) <= cfg.tolerance:
            idx += 1
            steps_on_wp = 0
        if idx >= n_wp:
            break
        target = waypoints[idx]
        delta = np.clip(cfg.gain * (target - ee), -max_step, max_step)
        if (not gripper_closed and env.state.object_pos is not None
                and np.linalg.norm(ee - env.state.object_pos) <= close_radius):
            gripper_closed = True
        action = np.concatenate([delta / max_step, [1.0 if gripper_closed else -1.0]])
        obs = env.observe()
        result = env.step(action)
        transitions.append(Transition(
            p=ee, o=obs, a=action.astype(np.float32), r=result.reward,
            p_next=env.state.ee_pos.copy(), o_next=result.observation,
            done=result.success))  # bootstrap-terminal: timeouts are not absorbing
        steps += 1
        steps_on_wp += 1
        if steps_on_wp >= cfg.per_waypoint_budget:
            idx += 1
            steps_on_wp = 0
    return Demonstration(transitions=transitions, task=env.task, trajectory_id=trajectory_id,
                         success=bool(env.state.success), completed=idx >= n_wp)


def collect(env: Env, trajectories: list, cfg: ServoConfig = ServoConfig(),
            scenes: list | None = None, randomization_level: float = 1.0,
            rng: np.random.Generator | None = None) -> DemoSet:
    """One demonstration per trajectory, each in its own (or a given) scene."""
    if not trajectories:
        raise ConfigError("need at least one trajectory")
    if scenes is not None and len(scenes) != len(trajectories):
        raise ConfigError("scenes must align with trajectories")
    if rng is None:
        rng = np.random.default_rng(0)
    demos = []
    for i, traj in enumerate(trajectories):
        if scenes is not None:
            env.reset_to(scenes[i])
        else:
            env.reset(randomization_level, rng)
        demos.append(servo(env, traj, cfg, trajectory_id=i))
    return DemoSet(demos=demos, task=env.task, config=cfg)


def concat_stage_trajectories(trajs: list, n_points: int | None = None) -> spline.Trajectory3D:
    """Join multi-stage trajectories, dropping duplicate junction points."""
    if not trajs:
        raise ConfigError("need at least one trajectory")
    pts = [trajs[0].points]
    for t in trajs[1:]:
        chunk = t.points
        if np.allclose(chunk[0], pts[-1][-1]):
            chunk = chunk[1:]
        pts.append(chunk)
    merged = np.concatenate(pts, axis=0)
    if n_points is None:
        n_points = merged.shape[0]
    return spline.resample_uniform(spline.Trajectory3D(merged), n_points)


def max_tracking_deviation(demo: Demonstration, traj: spline.Trajectory3D) -> float:
    """Largest distance from the executed path to the reference polyline."""
    path = demo.positions()
    ref = traj.points
    seg_start = ref[:-1]
    seg_vec = ref[1:] - ref[:-1]
    seg_len2 = np.maximum((seg_vec ** 2).sum(axis=1), 1e-18)
    worst = 0.0
    for p in path:
        t = np.clip(((p - seg_start) * seg_vec).sum(axis=1) / seg_len2, 0.0, 1.0)
        closest = seg_start + t[:, None] * seg_vec
        worst = max(worst, float(np.linalg.norm(closest - p, axis=1).min()))
    return worst


@dataclass
class TaskDemoResult:
    demo_set: DemoSet
    scenes: list
    sketch_pairs: list
    trajectories: list
    intents: list = field(default_factory=list)


def generate_task_demos(env: Env, model: gen.GeneratorModel, n_sketches: int = 3,
                        m: int = 3, noise_scale: float | None = None,
                        cfg: ServoConfig | None = None,
                        style: geo.SketchStyle | None = None,
                        randomization_level: float = 1.0,
                        intent_wiggle: float = 0.01,
                        rng: np.random.Generator | None = None) -> TaskDemoResult:
    """Stage 1 end to end: sample scenes, draw intent sketches, generate m
    trajectories per sketch pair, servo each in its scene."""
    if rng is None:
        rng = np.random.default_rng(0)
    if style is None:
        style = geo.SketchStyle(mode=model.hp.style_mode)
    if cfg is None:
        cfg = ServoConfig()
        if env.task == "push":
            cfg = ServoConfig(gripper_schedule="close_at_closest_approach")
    ws = model.workspace if model.workspace is not None else env.ws
    scenes, pairs, trajs, scene_per_traj, intents = [], [], [], [], []
    for _ in range(n_sketches):
        state = env.reset(randomization_level, rng)
        wps = env.intent_waypoints(state, rng)
        intent = datagen.intent_trajectory(wps, rng, wiggle=intent_wiggle)
        intent = spline.resample_uniform(intent, model.hp.n_tp)
        s1, s2 = geo.render_sketch_pair(intent, ws, style, model.hp.image_size)
        sampled = gen.sample_trajectories(model, s1, s2, m, noise_scale, rng)
        scenes.append(state)
        pairs.append((s1, s2))
        intents.append(intent)
        for t in sampled:
            trajs.append(t)
            scene_per_traj.append(state)
    demo_set = collect(env, trajs, cfg, scenes=scene_per_traj)
    return TaskDemoResult(demo_set=demo_set, scenes=scenes, sketch_pairs=pairs,
                          trajectories=trajs, intents=intents)
