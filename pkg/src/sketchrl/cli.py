"""Command-line entry points."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import datagen, demos, envs, generator as gen, geometry as geo, policy, runner, spline
from .errors import SketchRLError


def _add_gen_data(sub):
    p = sub.add_parser("gen-data", help="build a synthetic play-trajectory dataset")
    p.add_argument("--out", required=True, help="output root directory")
    p.add_argument("--name", default="play")
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-tp", type=int, default=datagen.DEFAULT_N_TP)
    p.add_argument("--image-size", type=int, default=64)
    p.add_argument("--style", choices=("markers", "gradient"), default="markers")
    p.add_argument("--task", default="reach", help="task whose workspace bounds to use")
    p.add_argument("--waypoints", type=int, nargs=2, default=(4, 8))


def _add_train_generator(sub):
    p = sub.add_parser("train-generator", help="train the sketch-to-trajectory generator")
    p.add_argument("--dataset", required=True, help="path to manifest.json")
    p.add_argument("--out", required=True, help="checkpoint prefix (writes .bin/.json)")
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--batch", type=int, default=128)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--kld-weight", type=float, default=1e-4)
    p.add_argument("--kld-anneal", action="store_true")
    p.add_argument("--no-vae", action="store_true", help="CNN-only ablation")
    p.add_argument("--seed", type=int, default=0)


def _add_sketch2traj(sub):
    p = sub.add_parser("sketch2traj", help="generate 3D trajectories from two sketch PNGs")
    p.add_argument("--model", required=True, help="generator checkpoint prefix")
    p.add_argument("--view1", required=True)
    p.add_argument("--view2", required=True)
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--noise", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="write JSON here instead of stdout")


def _add_demo_collect(sub):
    p = sub.add_parser("demo-collect", help="servo trajectories into demonstrations")
    p.add_argument("--task", default="reach", choices=envs.TASKS)
    p.add_argument("--out", required=True, help="demo-set JSONL path")
    p.add_argument("--model", default=None, help="generator prefix (full stage 1)")
    p.add_argument("--trajs", default=None, help="JSON file of trajectories to execute")
    p.add_argument("--n-sketches", type=int, default=3)
    p.add_argument("--m", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--level", type=float, default=1.0, help="randomization level")


def _add_train_policy(sub):
    p = sub.add_parser("train-policy", help="BC bootstrap + TD3 with shaped reward")
    p.add_argument("--task", default="reach", choices=envs.TASKS)
    p.add_argument("--out", required=True, help="run directory")
    p.add_argument("--model", default=None, help="generator prefix for stage 1")
    p.add_argument("--demos", default=None, help="existing demo-set JSONL")
    p.add_argument("--steps", type=int, default=30_000)
    p.add_argument("--lambda", dest="lam", type=float, default=0.05)
    p.add_argument("--m", type=int, default=3)
    p.add_argument("--n-sketches", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--eval-interval", type=int, default=1000)
    p.add_argument("--eval-episodes", type=int, default=20)
    p.add_argument("--bc-epochs", type=int, default=300)
    p.add_argument("--no-bc", action="store_true")
    p.add_argument("--no-demos", action="store_true", help="pure RL control")
    p.add_argument("--quiet", action="store_true")


def _add_eval(sub):
    p = sub.add_parser("eval", help="evaluate a trained run directory")
    p.add_argument("--run", required=True)
    p.add_argument("--task", default=None, help="defaults to the run config task")
    p.add_argument("--episodes", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)


def _add_ablate(sub):
    p = sub.add_parser("ablate", help="sweep m in {1,3,5,10} or lambda in {0.005,0.05,0.1,0.5}")
    p.add_argument("--param", required=True, choices=("m", "lambda"))
    p.add_argument("--task", default="reach", choices=envs.TASKS)
    p.add_argument("--model", required=True, help="generator prefix")
    p.add_argument("--out", required=True)
    p.add_argument("--seeds", type=int, default=3)
    p.add_argument("--steps", type=int, default=15_000)
    p.add_argument("--lambda", dest="lam", type=float, default=0.05)
    p.add_argument("--m", type=int, default=3)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--eval-interval", type=int, default=1000)
    p.add_argument("--eval-episodes", type=int, default=20)


def _add_serve(sub):
    p = sub.add_parser("serve", help="run the HTTP service for the sketch-pad UI")
    p.add_argument("--model", required=True, help="generator prefix")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8008)
    p.add_argument("--out", default="runs", help="root for service-launched runs")
    p.add_argument("--frontend", default=None, help="static directory to serve at /")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sketchrl",
        description="Sketch-driven trajectory generation and demonstration-bootstrapped RL")
    sub = parser.add_subparsers(dest="command", required=True)
    for add in (_add_gen_data, _add_train_generator, _add_sketch2traj, _add_demo_collect,
                _add_train_policy, _add_eval, _add_ablate, _add_serve):
        add(sub)
    return parser


def _require(path, what: str) -> Path:
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"{what} not found: {p}")
    return p


def _load_model(prefix):
    _require(Path(prefix).with_suffix(".json"), "generator checkpoint sidecar")
    _require(Path(prefix).with_suffix(".bin"), "generator checkpoint weights")
    return gen.load_generator(prefix)


def _snapshot(args, out_dir: Path, name: str = "config.json") -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / name).write_text(json.dumps(vars(args), indent=2, default=str))


def cmd_gen_data(args) -> int:
    ws = envs.default_task_config(args.task).workspace()
    cfg = datagen.PlayConfig(workspace=ws, waypoint_range=tuple(args.waypoints),
                             seed=args.seed)
    style = geo.SketchStyle(mode=args.style)
    manifest = datagen.build_dataset(args.n, cfg, style, args.out, name=args.name,
                                     n_tp=args.n_tp, image_size=args.image_size)
    _snapshot(args, Path(args.out) / args.name, "gen-data.config.json")
    print(f"wrote {manifest.n} records under {Path(args.out) / args.name}")
    return 0


def cmd_train_generator(args) -> int:
    data = datagen.load_dataset(_require(args.dataset, "dataset manifest"))
    hp = gen.GenHyperparams(
        lr=args.lr, batch=args.batch, epochs=args.epochs, kld_weight=args.kld_weight,
        kld_anneal=args.kld_anneal, use_vae=not args.no_vae, seed=args.seed,
        n_tp=data.n_tp, image_size=data.image_size, style_mode=data.style_mode)
    model = gen.GeneratorModel(hp, np.random.default_rng(args.seed), workspace=data.workspace)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)

    rows = []

    def log(entry):
        rows.append(entry)
        s2 = entry["stream2"]
        print(f"epoch {entry['epoch']:3d}  total {s2.total:.4f}  traj {s2.traj:.4f}  "
              f"sketch {s2.sketch:.4f}  kld {s2.kld:.1f}  "
              f"val_traj {entry.get('val_traj_mse', float('nan')):.5f}", flush=True)

    gen.train(model, data, hp, np.random.default_rng(args.seed), log_fn=log)
    gen.save_generator(model, out)
    with open(out.with_suffix(".history.csv"), "w") as fh:
        fh.write("epoch,beta,s1_total,s1_sketch,s1_kld,s2_total,s2_traj,s2_sketch,s2_kld,"
                 "val_traj_mse,val_sketch_mse\n")
        for e in rows:
            s1, s2 = e["stream1"], e["stream2"]
            fh.write(f"{e['epoch']},{e['beta']},{s1.total},{s1.sketch},{s1.kld},"
                     f"{s2.total},{s2.traj},{s2.sketch},{s2.kld},"
                     f"{e.get('val_traj_mse', '')},{e.get('val_sketch_mse', '')}\n")
    (out.parent / (out.name + ".train.config.json")).write_text(
        json.dumps(vars(args), indent=2, default=str))
    print(f"saved generator to {out}.bin / {out}.json")
    return 0


def cmd_sketch2traj(args) -> int:
    model = _load_model(args.model)
    img1 = geo.SketchImage.from_png_bytes(_require(args.view1, "view1 sketch").read_bytes())
    img2 = geo.SketchImage.from_png_bytes(_require(args.view2, "view2 sketch").read_bytes())
    rng = np.random.default_rng(args.seed)
    trajs = gen.sample_trajectories(model, img1, img2, args.m, args.noise, rng)
    doc = {"task": None, "n_tp": model.hp.n_tp,
           "trajectories": [[[float(c) for c in p] for p in t.points] for t in trajs]}
    text = json.dumps(doc, indent=2)
    if args.out:
        Path(args.out).write_text(text)
        print(f"wrote {args.m} trajectories to {args.out}")
    else:
        print(text)
    return 0


def cmd_demo_collect(args) -> int:
    env = envs.make_env(args.task)
    rng = np.random.default_rng(args.seed)
    if args.trajs:
        doc = json.loads(_require(args.trajs, "trajectory file").read_text())
        trajs = [spline.Trajectory3D(np.asarray(t)) for t in doc["trajectories"]]
        cfg = demos.ServoConfig() if args.task != "push" else \
            demos.ServoConfig(gripper_schedule="close_at_closest_approach")
        demo_set = demos.collect(env, trajs, cfg, randomization_level=args.level, rng=rng)
    elif args.model:
        model = _load_model(args.model)
        result = demos.generate_task_demos(env, model, n_sketches=args.n_sketches,
                                           m=args.m, randomization_level=args.level,
                                           rng=rng)
        demo_set = result.demo_set
    else:
        raise SketchRLError("provide --model (full stage 1) or --trajs (precomputed)")
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    demo_set.to_jsonl(out)
    out.with_suffix(out.suffix + ".config.json").write_text(
        json.dumps(vars(args), indent=2, default=str))
    print(f"{len(demo_set)} demos, success rate {demo_set.success_rate():.2f}, "
          f"mean length {demo_set.mean_length():.1f} -> {out}")
    return 0


def cmd_train_policy(args) -> int:
    demo_set = None
    if args.demos:
        demo_set = demos.DemoSet.from_jsonl(_require(args.demos, "demo set"))
    use_demos = not args.no_demos
    if use_demos and demo_set is None and args.model is None:
        raise SketchRLError("provide --demos or --model, or pass --no-demos")
    if args.model:
        _load_model(args.model)  # fail fast on a missing checkpoint
    hp = policy.RLHyperparams(lam=args.lam, m=args.m, n_sketches=args.n_sketches,
                              total_steps=args.steps, eval_interval=args.eval_interval,
                              eval_episodes=args.eval_episodes, seed=args.seed)
    log = None if args.quiet else (
        lambda row: print(f"step {row['step']:6d}  success {row['eval_success']:.2f}  "
                          f"r_hat {row['mean_r_hat']:.4f}  IL {row['source_fraction_il']:.2f}",
                          flush=True))
    result = runner.run_pipeline(args.task, args.model, hp, seed=args.seed,
                                 use_bc=not args.no_bc, use_demos=use_demos,
                                 demo_set=demo_set, bc_epochs=args.bc_epochs,
                                 run_dir=args.out, log_fn=log)
    print(f"final eval success: {result.final_success:.2f} "
          f"(demos: {result.n_demos}, demo success rate {result.demo_success_rate:.2f})")
    return 0


def cmd_eval(args) -> int:
    run_dir = _require(args.run, "run directory")
    config = json.loads((run_dir / "config.json").read_text())
    task = args.task or config["task"]
    env = envs.make_env(task)
    hp = policy.RLHyperparams(**{k: tuple(v) if isinstance(v, list) else v
                                 for k, v in config["hyperparams"].items()})
    agent = policy.load_agent(run_dir / "agent.bin", env.observation_dim,
                              env.action_dim, hp)
    bc = None
    if (run_dir / "bc.bin").exists():
        bc = policy.load_bc(run_dir / "bc.bin", env.observation_dim, env.action_dim,
                            hp.bc_hidden)
    rate = policy.evaluate(agent, bc, env, args.episodes, np.random.default_rng(args.seed),
                           hp, hp.randomization_level)
    print(f"success rate over {args.episodes} episodes: {rate:.3f}")
    return 0


def cmd_ablate(args) -> int:
    _load_model(args.model)
    hp = policy.RLHyperparams(lam=args.lam, m=args.m, total_steps=args.steps,
                              eval_interval=args.eval_interval,
                              eval_episodes=args.eval_episodes)
    out = Path(args.out)
    _snapshot(args, out, "ablate.config.json")
    summary = runner.run_ablation(args.param, args.task, args.model, hp,
                                  seeds=list(range(args.seeds)), out_dir=out,
                                  workers=args.workers)
    for value, stats in summary["values"].items():
        print(f"{args.param}={value}: mean final success {stats['mean']:.2f} "
              f"(seeds: {stats['finals']})")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    _load_model(args.model)
    app = create_app(args.model, out_root=args.out, frontend_dir=args.frontend)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


COMMANDS = {
    "gen-data": cmd_gen_data,
    "train-generator": cmd_train_generator,
    "sketch2traj": cmd_sketch2traj,
    "demo-collect": cmd_demo_collect,
    "train-policy": cmd_train_policy,
    "eval": cmd_eval,
    "ablate": cmd_ablate,
    "serve": cmd_serve,
}


def cli_dispatch(argv: list) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on unknown commands/options
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except (SketchRLError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli_dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
