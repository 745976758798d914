"""Toy 3D manipulation environments with sparse 0/1 rewards.

A point end-effector moves by clipped position deltas inside a workspace box.
Three tasks: Reach (touch a goal point), ButtonPress (push into a wall-mounted
button face until it depresses), Push (carry an object to a goal while the
gripper is closed). Success thresholds are tight enough that random policies
essentially never succeed, preserving the sparse-reward difficulty.
"""

from __future__ import annotations

import json
from copy import deepcopy
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import geometry as geo
from .errors import ConfigError, StateError

TASKS = ("reach", "button_press", "push")

DEFAULT_WS_MIN = (0.2, -0.2, 0.05)
DEFAULT_WS_MAX = (0.6, 0.2, 0.35)
DEFAULT_HOME = (0.25, 0.0, 0.30)


@dataclass(frozen=True)
class TaskConfig:
    task: str
    ws_min: tuple = DEFAULT_WS_MIN
    ws_max: tuple = DEFAULT_WS_MAX
    home: tuple = DEFAULT_HOME
    home_noise: float = 0.01  # meters at randomization level 1
    max_step: float = 0.02
    horizon: int = 200
    goal_center: tuple = (0.45, 0.0, 0.15)
    goal_half: tuple = (0.05, 0.07, 0.04)
    reach_threshold: float = 0.02
    # button task
    button_axis: tuple = (0.0, 1.0, 0.0)  # press direction
    button_radius: float = 0.02
    button_depth: float = 0.03  # contact window behind the face
    depress_threshold: float = 0.01
    # push task
    object_center: tuple = (0.40, 0.0, 0.07)
    object_half: tuple = (0.08, 0.10, 0.0)
    grasp_radius: float = 0.03
    push_threshold: float = 0.03

    def __post_init__(self):
        if self.task not in TASKS:
            raise ConfigError(f"unknown task {self.task!r}; expected one of {TASKS}")

    def workspace(self) -> geo.Workspace:
        return geo.Workspace(min=np.array(self.ws_min), max=np.array(self.ws_max))

    def to_json(self) -> str:
        return json.dumps({k: list(v) if isinstance(v, tuple) else v
                           for k, v in self.__dict__.items()}, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "TaskConfig":
        raw = json.loads(text)
        return cls(**{k: tuple(v) if isinstance(v, list) else v for k, v in raw.items()})


def default_task_config(task: str) -> TaskConfig:
    if task == "reach":
        return TaskConfig(task="reach")
    if task == "button_press":
        return TaskConfig(
            task="button_press",
            goal_center=(0.42, 0.18, 0.20), goal_half=(0.08, 0.0, 0.06))
    if task == "push":
        return TaskConfig(
            task="push",
            goal_center=(0.52, 0.0, 0.07), goal_half=(0.04, 0.08, 0.0),
            object_half=(0.05, 0.08, 0.0))
    raise ConfigError(f"unknown task {task!r}")


@dataclass
class EnvState:
    ee_pos: np.ndarray
    gripper: float
    goal: np.ndarray
    object_pos: np.ndarray | None = None
    button_depress: float = 0.0
    step_count: int = 0
    done: bool = False
    success: bool = False

    def to_dict(self) -> dict:
        return {
            "ee_pos": list(map(float, self.ee_pos)),
            "gripper": float(self.gripper),
            "goal": list(map(float, self.goal)),
            "object_pos": None if self.object_pos is None else list(map(float, self.object_pos)),
            "button_depress": float(self.button_depress),
            "step_count": self.step_count,
            "done": self.done,
            "success": self.success,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "EnvState":
        return cls(
            ee_pos=np.array(raw["ee_pos"], dtype=np.float64),
            gripper=float(raw["gripper"]),
            goal=np.array(raw["goal"], dtype=np.float64),
            object_pos=None if raw.get("object_pos") is None
            else np.array(raw["object_pos"], dtype=np.float64),
            button_depress=float(raw.get("button_depress", 0.0)),
            step_count=int(raw.get("step_count", 0)),
            done=bool(raw.get("done", False)),
            success=bool(raw.get("success", False)),
        )


@dataclass(frozen=True)
class Action:
    """Position delta command (meters) plus absolute gripper command in [0, 1]."""

    delta_p: np.ndarray
    gripper_cmd: float

    @classmethod
    def from_vector(cls, vec: np.ndarray, max_step: float) -> "Action":
        """Normalized [-1, 1]^4 policy action to a physical command."""
        v = np.clip(np.asarray(vec, dtype=np.float64), -1.0, 1.0)
        return cls(delta_p=v[:3] * max_step, gripper_cmd=(v[3] + 1.0) / 2.0)


@dataclass(frozen=True)
class StepResult:
    observation: np.ndarray
    reward: float
    done: bool
    success: bool


class Env:
    """Single-threaded environment instance; independent copies run in parallel."""

    def __init__(self, config: TaskConfig):
        self.config = config
        self.ws = config.workspace()
        self.state: EnvState | None = None

    @property
    def task(self) -> str:
        return self.config.task

    @property
    def observation_dim(self) -> int:
        return {"reach": 7, "button_press": 8, "push": 10}[self.task]

    action_dim = 4

    def reset(self, randomization_level: float = 1.0, rng: np.random.Generator | None = None
              ) -> EnvState:
        if rng is None:
            rng = np.random.default_rng(0)
        level = float(np.clip(randomization_level, 0.0, 1.0))
        cfg = self.config
        ee = np.array(cfg.home) + rng.uniform(-1.0, 1.0, 3) * cfg.home_noise * level
        ee = np.clip(ee, self.ws.min, self.ws.max)
        goal = np.array(cfg.goal_center) + rng.uniform(-1.0, 1.0, 3) * np.array(cfg.goal_half) * level
        obj = None
        if self.task == "push":
            obj = np.array(cfg.object_center) \
                + rng.uniform(-1.0, 1.0, 3) * np.array(cfg.object_half) * level
        self.state = EnvState(ee_pos=ee, gripper=0.0, goal=goal, object_pos=obj)
        return deepcopy(self.state)

    def reset_to(self, state: EnvState) -> EnvState:
        """Restore a recorded scene (fresh episode counters)."""
        self.state = replace(deepcopy(state), step_count=0, done=False, success=False)
        return deepcopy(self.state)

    def observe(self, state: EnvState | None = None) -> np.ndarray:
        s = state if state is not None else self.state
        if s is None:
            raise StateError("reset the environment first")
        parts = [s.ee_pos, [s.gripper]]
        if self.task == "button_press":
            parts.append([s.button_depress])
        if self.task == "push":
            parts.append(s.object_pos)
        parts.append(s.goal)  # goal stays last: discriminator features rely on it
        return np.concatenate(parts).astype(np.float32)

    def _success(self, s: EnvState) -> bool:
        cfg = self.config
        if self.task == "reach":
            return bool(np.linalg.norm(s.ee_pos - s.goal) < cfg.reach_threshold)
        if self.task == "button_press":
            return s.button_depress >= cfg.depress_threshold
        return bool(np.linalg.norm(s.object_pos - s.goal) < cfg.push_threshold)

    def step(self, action) -> StepResult:
        if self.state is None:
            raise StateError("reset the environment first")
        if self.state.done:
            raise StateError("episode is done; reset the environment")
        cfg = self.config
        if not isinstance(action, Action):
            # raw vectors are normalized policy actions in [-1, 1]^4
            action = Action.from_vector(np.asarray(action, dtype=np.float64), cfg.max_step)
        s = self.state
        delta = np.clip(action.delta_p, -cfg.max_step, cfg.max_step)
        gripper = float(np.clip(action.gripper_cmd, 0.0, 1.0))

        ee_old = s.ee_pos.copy()
        ee_new = np.clip(ee_old + delta, self.ws.min, self.ws.max)

        if self.task == "push":
            attached = gripper > 0.5 and np.linalg.norm(ee_old - s.object_pos) <= cfg.grasp_radius
            if attached:
                s.object_pos = np.clip(s.object_pos + (ee_new - ee_old), self.ws.min, self.ws.max)

        if self.task == "button_press":
            axis = np.array(cfg.button_axis)
            rel_old = ee_old - s.goal
            perp = rel_old - (rel_old @ axis) * axis
            axial = rel_old @ axis  # negative in front of the face
            in_contact = (np.linalg.norm(perp) <= cfg.button_radius
                          and -cfg.button_depth <= axial <= cfg.button_depth)
            if in_contact:
                s.button_depress += max(0.0, float((ee_new - ee_old) @ axis))

        s.ee_pos = ee_new
        s.gripper = gripper
        s.step_count += 1
        s.success = self._success(s)
        s.done = s.success or s.step_count >= cfg.horizon
        reward = 1.0 if s.success else 0.0
        return StepResult(observation=self.observe(), reward=reward, done=s.done,
                          success=s.success)

    def goal_from_obs(self, obs: np.ndarray) -> np.ndarray:
        return np.asarray(obs[..., -3:], dtype=np.float64)

    def intent_waypoints(self, state: EnvState, rng: np.random.Generator) -> np.ndarray:
        """Coarse task waypoints a human sketch would express for this scene."""
        cfg = self.config
        if self.task == "reach":
            return np.stack([state.ee_pos, state.goal])
        if self.task == "button_press":
            axis = np.array(cfg.button_axis)
            pre = state.goal - axis * 0.06
            push = state.goal + axis * 0.005
            return np.stack([state.ee_pos, pre, push])
        above = state.object_pos + np.array([0.0, 0.0, 0.02])
        return np.stack([state.ee_pos, above, state.object_pos, state.goal])

    # ---- rendering ----------------------------------------------------------

    def render_views(self, state: EnvState | None = None, size: int = 256
                     ) -> tuple[geo.SketchImage, geo.SketchImage]:
        s = state if state is not None else self.state
        if s is None:
            raise StateError("reset the environment first")
        return tuple(self._render(s, view, size) for view in geo.CANONICAL_VIEWS)

    def _px(self, point: np.ndarray, view: geo.CameraView, size: int) -> tuple[int, int]:
        u = (point[view.axis_u] - self.ws.min[view.axis_u]) / self.ws.extent[view.axis_u]
        v = (point[view.axis_v] - self.ws.min[view.axis_v]) / self.ws.extent[view.axis_v]
        if view.flip_u:
            u = 1.0 - u
        if view.flip_v:
            v = 1.0 - v
        u = float(np.clip(u, 0.0, 1.0))
        v = float(np.clip(v, 0.0, 1.0))
        return int(round(u * (size - 1))), int(round(v * (size - 1)))

    def _radius(self, meters: float, size: int) -> int:
        return max(2, int(round(meters / float(self.ws.extent.max()) * size)))

    def _render(self, s: EnvState, view: geo.CameraView, size: int) -> geo.SketchImage:
        from .neural.backend import kernels as K

        canvas = np.full((size, size, 3), 24, dtype=np.uint8)  # dark background
        canvas[0, :] = canvas[-1, :] = canvas[:, 0] = canvas[:, -1] = 70  # workspace frame
        gx, gy = self._px(s.goal, view, size)
        if self.task == "button_press":
            r = self._radius(self.config.button_radius + 0.01, size)
            canvas[max(gy - r, 0):gy + r + 1, max(gx - r, 0):gx + r + 1] = (180, 40, 40)
        else:
            K.fill_disk(canvas, gx, gy, self._radius(0.015, size),
                        np.array([60, 120, 255], dtype=np.uint8))
        if self.task == "push":
            ox, oy = self._px(s.object_pos, view, size)
            r = self._radius(0.012, size)
            canvas[max(oy - r, 0):oy + r + 1, max(ox - r, 0):ox + r + 1] = (255, 150, 40)
        ex, ey = self._px(s.ee_pos, view, size)
        K.fill_disk(canvas, ex, ey, self._radius(0.010, size),
                    np.array([235, 235, 235], dtype=np.uint8))
        return geo.SketchImage(canvas)


def make_env(task: str | TaskConfig) -> Env:
    if isinstance(task, TaskConfig):
        return Env(task)
    return Env(default_task_config(task))


def load_task_config(path) -> TaskConfig:
    return TaskConfig.from_json(Path(path).read_text())


def save_task_config(config: TaskConfig, path) -> None:
    Path(path).write_text(config.to_json())
