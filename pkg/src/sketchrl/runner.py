"""Experiment orchestration: the sketch -> demos -> BC -> RL pipeline, run
directories, learning-curve CSV output, and seed sweeps."""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass
from multiprocessing import get_context
from pathlib import Path

import numpy as np

from . import demos, envs, generator as gen, policy
from .errors import ConfigError

CURVE_COLUMNS = ("step", "eval_success", "mean_r_hat", "disc_loss", "source_fraction_il")


@dataclass
class PipelineResult:
    final_success: float
    curve: list
    demo_success_rate: float
    n_demos: int
    run_dir: str | None = None


def write_run_dir(run_dir, config: dict, result: policy.TrainResult,
                  bc: policy.BCPolicy | None, demo_set: demos.DemoSet | None) -> None:
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    (run_dir / "config.json").write_text(json.dumps(config, indent=2, default=str))
    policy.save_agent(result.agent, run_dir / "agent.bin")
    policy.save_disc(result.disc, run_dir / "disc.bin")
    if bc is not None:
        policy.save_bc(bc, run_dir / "bc.bin")
    if demo_set is not None:
        demo_set.to_jsonl(run_dir / "demos.jsonl")
    with open(run_dir / "curve.csv", "w") as fh:
        fh.write(",".join(CURVE_COLUMNS) + "\n")
        for row in result.curve:
            fh.write(",".join("" if row.get(c) is None else str(row.get(c, ""))
                              for c in CURVE_COLUMNS) + "\n")
    with open(run_dir / "events.jsonl", "w") as fh:
        for event in result.events:
            fh.write(json.dumps(event) + "\n")


def run_pipeline(task: str, model_prefix, hp: policy.RLHyperparams,
                 seed: int | None = None, use_bc: bool = True, use_demos: bool = True,
                 demo_set: demos.DemoSet | None = None,
                 bc_epochs: int = 300, run_dir=None, log_fn=None) -> PipelineResult:
    """Full method (or its controls) on one task with one seed.

    With use_demos, stage 1 runs first: intent sketches on sampled scenes go
    through the generator and open-loop servoing. Pure-RL controls pass
    use_bc=False, use_demos=False and lam=0 in hp.
    """
    if seed is None:
        seed = hp.seed
    env = envs.make_env(task)
    rng = np.random.default_rng([seed, 11])

    if use_demos and demo_set is None:
        if model_prefix is None:
            raise ConfigError("demo generation needs a generator checkpoint")
        model = gen.load_generator(model_prefix)
        stage1 = demos.generate_task_demos(
            env, model, n_sketches=hp.n_sketches, m=hp.m,
            randomization_level=hp.randomization_level, rng=rng)
        demo_set = stage1.demo_set
    if not use_demos:
        demo_set = None

    bc = None
    if use_bc:
        if demo_set is None or len(demo_set) == 0:
            raise ConfigError("BC pretraining needs demonstrations")
        bc, _ = policy.bc_train(demo_set, env.observation_dim, env.action_dim,
                                policy.BCTrainConfig(epochs=bc_epochs),
                                hidden=hp.bc_hidden, rng=np.random.default_rng([seed, 13]))

    hp_run = policy.RLHyperparams(**{**asdict(hp), "seed": seed})
    result = policy.train(env, bc, demo_set, hp_run,
                          np.random.default_rng([seed, 17]), log_fn=log_fn)
    final = result.curve[-1]["eval_success"]
    out = PipelineResult(
        final_success=final, curve=result.curve,
        demo_success_rate=demo_set.success_rate() if demo_set else 0.0,
        n_demos=len(demo_set) if demo_set else 0,
        run_dir=str(run_dir) if run_dir else None)
    if run_dir is not None:
        config = {"task": task, "seed": seed, "use_bc": use_bc, "use_demos": use_demos,
                  "model": str(model_prefix), "bc_epochs": bc_epochs,
                  "hyperparams": asdict(hp_run)}
        write_run_dir(run_dir, config, result, bc, demo_set)
    return out


def _seed_job(args):
    kwargs, seed = args
    os.environ.setdefault("OMP_NUM_THREADS", "1")
    os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")
    return seed, run_pipeline(seed=seed, **kwargs)


def run_seeds(task: str, model_prefix, hp: policy.RLHyperparams, seeds: list,
              use_bc: bool = True, use_demos: bool = True, out_dir=None,
              workers: int = 1, run_name: str = "run") -> dict:
    """Seed sweep; returns {seed: PipelineResult}. Workers > 1 forks processes
    (each run owns its state exclusively, so seed-parallelism is safe)."""
    jobs = []
    for seed in seeds:
        run_dir = Path(out_dir) / f"{run_name}_seed{seed}" if out_dir else None
        jobs.append(({"task": task, "model_prefix": model_prefix, "hp": hp,
                      "use_bc": use_bc, "use_demos": use_demos, "run_dir": run_dir}, seed))
    if workers <= 1 or len(jobs) == 1:
        results = [_seed_job(j) for j in jobs]
    else:
        ctx = get_context("fork")
        with ctx.Pool(processes=min(workers, len(jobs))) as pool:
            results = pool.map(_seed_job, jobs)
    return dict(results)


ABLATION_VALUES = {"m": (1, 3, 5, 10), "lambda": (0.005, 0.05, 0.1, 0.5)}


def run_ablation(param: str, task: str, model_prefix, hp: policy.RLHyperparams,
                 seeds: list, out_dir, workers: int = 1) -> dict:
    """Sweep m or lambda across the paper grid; one run directory per value+seed."""
    if param not in ABLATION_VALUES:
        raise ConfigError(f"ablation parameter must be one of {sorted(ABLATION_VALUES)}")
    out_dir = Path(out_dir)
    summary = {"param": param, "task": task, "values": {}}
    for value in ABLATION_VALUES[param]:
        if param == "m":
            hp_v = policy.RLHyperparams(**{**asdict(hp), "m": int(value)})
        else:
            hp_v = policy.RLHyperparams(**{**asdict(hp), "lam": float(value)})
        results = run_seeds(task, model_prefix, hp_v, seeds, out_dir=out_dir,
                            workers=workers, run_name=f"{param}_{value}")
        finals = [r.final_success for r in results.values()]
        summary["values"][str(value)] = {
            "finals": finals, "mean": float(np.mean(finals)),
            "runs": [str(out_dir / f"{param}_{value}_seed{s}") for s in seeds]}
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2))
    return summary
