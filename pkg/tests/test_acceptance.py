"""Acceptance suite: one test per criterion, one printed pass/fail line each.

Run with `pytest tests/test_acceptance.py -v -s`. The training-based criteria
are marked slow; the whole suite runs them by default.
"""

import time
from dataclasses import asdict

import numpy as np
import pytest

from sketchrl import datagen, demos, envs, generator as gen, geometry as geo
from sketchrl import neural, policy, runner, spline
from sketchrl.neural import tensor as T

from oracles import deboor_point


def report(name: str, ok: bool, detail: str) -> None:
    print(f"\n[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, f"{name}: {detail}"


# ---------------------------------------------------------------- criterion 1

def test_spline_oracle_equivalence():
    t0 = time.time()
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(100):
        n_cp = int(rng.integers(4, 31))
        degree = int(rng.integers(1, 4))
        n_tp = int(rng.integers(2, 80))
        kv = spline.make_uniform_knots(n_cp, degree)
        bm = spline.basis_matrix(kv, n_tp)
        assert np.all(bm.entries >= 0)
        assert np.abs(bm.entries.sum(axis=1) - 1.0).max() < 1e-9
        first = np.zeros(n_cp)
        first[0] = 1.0
        last = np.zeros(n_cp)
        last[-1] = 1.0
        np.testing.assert_array_equal(bm.entries[0], first)
        np.testing.assert_array_equal(bm.entries[-1], last)
        ctrl = rng.uniform(-1, 1, size=(n_cp, 3))
        traj = spline.interpolate(bm, spline.ControlPoints(ctrl))
        probe = rng.choice(n_tp, size=min(8, n_tp), replace=False)
        for j in probe:
            expected = deboor_point(float(bm.params[j]), ctrl, degree, kv.values)
            worst = max(worst, float(np.abs(traj.points[j] - expected).max()))
    elapsed = time.time() - t0
    report("spline oracle equivalence", worst < 1e-9 and elapsed < 5.0,
           f"max |matrix - recursive| = {worst:.2e} over 100 configs in {elapsed:.2f}s")


# ---------------------------------------------------------------- criterion 2

def test_fit_round_trip():
    t0 = time.time()
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(50):
        n_cp = int(rng.integers(4, 21))
        degree = int(rng.integers(1, 4))
        kv = spline.make_uniform_knots(n_cp, degree)
        bm = spline.basis_matrix(kv, 200)
        ctrl = rng.uniform(-0.5, 0.5, size=(n_cp, 3))
        traj = spline.interpolate(bm, spline.ControlPoints(ctrl))
        fitted = spline.fit_control_points(traj, n_cp, degree)
        worst = max(worst, float(np.abs(fitted.points - ctrl).max()))
    elapsed = time.time() - t0
    report("fit round trip", worst < 1e-6 and elapsed < 5.0,
           f"max control-point error {worst:.2e} over 50 cases in {elapsed:.2f}s")


# ---------------------------------------------------------------- criterion 3

def test_gradient_verification():
    t0 = time.time()
    rng = np.random.default_rng(3)
    layer_cases = [
        ([neural.LayerSpec("dense", {"in_size": 6, "out_size": 5})], (3, 6)),
        ([neural.LayerSpec("conv2d", {"in_ch": 2, "out_ch": 3, "kernel": 4,
                                      "stride": 2, "pad": 1})], (2, 8, 8, 2)),
        ([neural.LayerSpec("transposed_conv2d", {"in_ch": 3, "out_ch": 2, "kernel": 4,
                                                 "stride": 2, "pad": 1})], (2, 4, 4, 3)),
        ([neural.LayerSpec("dense", {"in_size": 5, "out_size": 5}),
          neural.LayerSpec("relu")], (2, 5)),
        ([neural.LayerSpec("dense", {"in_size": 5, "out_size": 5}),
          neural.LayerSpec("tanh")], (2, 5)),
        ([neural.LayerSpec("dense", {"in_size": 5, "out_size": 5}),
          neural.LayerSpec("sigmoid")], (2, 5)),
        ([neural.LayerSpec("conv2d", {"in_ch": 1, "out_ch": 2, "kernel": 3,
                                      "stride": 1, "pad": 1}),
          neural.LayerSpec("flatten"),
          neural.LayerSpec("dense", {"in_size": 72, "out_size": 3})], (1, 6, 6, 1)),
        ([neural.LayerSpec("dense", {"in_size": 6, "out_size": 6}),
          neural.LayerSpec("relu"),
          neural.LayerSpec("dropout", {"rate": 0.5}),
          neural.LayerSpec("dense", {"in_size": 6, "out_size": 2})], (3, 6)),
    ]
    worst = 0.0
    for specs, shape in layer_cases:
        net = neural.Sequential.from_specs(specs, rng)
        x = rng.normal(size=shape).astype(np.float32)
        mode = "train" if any(s.kind == "dropout" for s in specs) else "eval"
        worst = max(worst, neural.gradient_check(net, x, eps=1e-3, mode=mode, seed=5))

    hp = gen.GenHyperparams(image_size=16, latent_dim=4, n_cp=4, n_tp=10,
                            encoder_channels=(4, 4, 8, 8), mlp_hidden=(16,), batch=1)
    graph_model = gen.GeneratorModel(hp, np.random.default_rng(2))
    graph_err = gen.gradient_check_graph(graph_model, seed=0)
    worst = max(worst, graph_err)
    elapsed = time.time() - t0
    report("gradient verification", worst < 1e-3 and elapsed < 60.0,
           f"max relative error {worst:.2e} (graph {graph_err:.2e}) in {elapsed:.1f}s")


# ---------------------------------------------------------------- criterion 4

@pytest.mark.slow
def test_generator_desk_training(desk):
    m = desk.metrics
    ratio = m["val_traj_mse"] / m["baseline_mse"]
    ok = (ratio <= 1.0 / 3.0
          and m["vae_val_sketch_mse"] < m["cnn_val_sketch_mse"]
          and m["train_seconds"] < 1800)
    report("generator desk training", ok,
           f"val traj MSE {m['val_traj_mse']:.6f} vs baseline {m['baseline_mse']:.6f} "
           f"(ratio {ratio:.3f} <= 0.333); VAE recon {m['vae_val_sketch_mse']:.5f} < "
           f"CNN-only {m['cnn_val_sketch_mse']:.5f}; trained in {m['train_seconds']:.0f}s")


# ---------------------------------------------------------------- criterion 5

@pytest.mark.slow
def test_latent_interpolation(desk):
    model = desk.model
    data = desk.data
    pair_a = (geo.SketchImage(data.sketches1[0]), geo.SketchImage(data.sketches2[0]))
    pair_b = (geo.SketchImage(data.sketches1[1]), geo.SketchImage(data.sketches2[1]))
    steps = 7
    seq = gen.interpolate_latent(model, pair_a, pair_b, steps)
    end_a = gen.forward(model, *pair_a).trajectory.points
    end_b = gen.forward(model, *pair_b).trajectory.points
    exact = (np.array_equal(seq[0].trajectory.points, end_a)
             and np.array_equal(seq[-1].trajectory.points, end_b))
    dist_ab = float(np.linalg.norm(end_a - end_b, axis=1).mean())
    gaps = [float(np.linalg.norm(seq[i].trajectory.points - seq[i + 1].trajectory.points,
                                 axis=1).mean()) for i in range(steps - 1)]
    bound = 2.0 * dist_ab / steps
    ok = exact and max(gaps) < bound
    report("latent interpolation", ok,
           f"endpoints exact: {exact}; max adjacent gap {max(gaps):.4f} < "
           f"2*dist/steps = {bound:.4f}")


# ---------------------------------------------------------------- criterion 6

RL_HP = policy.RLHyperparams()  # defaults carry the Appendix-C table values


@pytest.mark.slow
def test_rl_bootstrap_analogue(desk):
    t0 = time.time()
    seeds = [0, 1, 2, 3, 4]
    full = runner.run_seeds("reach", str(desk.model_prefix), RL_HP, seeds,
                            workers=2, run_name="accept_full")
    control_hp = policy.RLHyperparams(**{**asdict(RL_HP), "lam": 0.0})
    control = runner.run_seeds("reach", None, control_hp, seeds, use_bc=False,
                               use_demos=False, workers=2, run_name="accept_control")
    elapsed = time.time() - t0
    full_mean = float(np.mean([r.final_success for r in full.values()]))
    control_mean = float(np.mean([r.final_success for r in control.values()]))
    ok = full_mean >= 0.8 and control_mean <= 0.4 and elapsed < 45 * 60
    report("RL bootstrap analogue", ok,
           f"full method mean {full_mean:.2f} >= 0.8; pure TD3 {control_mean:.2f} <= 0.4 "
           f"({elapsed / 60:.1f} min, seeds {[r.final_success for r in full.values()]})")


# ---------------------------------------------------------------- criterion 7

@pytest.mark.slow
def test_lambda_ablation_direction(desk, tmp_path):
    hp = policy.RLHyperparams(**{**asdict(RL_HP), "total_steps": 15_000})
    summary = runner.run_ablation("lambda", "reach", str(desk.model_prefix), hp,
                                  seeds=[0, 1, 2], out_dir=tmp_path, workers=2)
    means = {v: s["mean"] for v, s in summary["values"].items()}
    worst_value = min(means, key=means.get)
    others = [means[v] for v in means if v != "0.5"]
    ok = worst_value == "0.5" and means["0.5"] < min(others)
    report("lambda ablation direction", ok,
           f"final success by lambda: {means} (0.5 strictly lowest: {ok})")


# ---------------------------------------------------------------- criterion 8

@pytest.mark.slow
def test_m_ablation_harness(desk, tmp_path):
    hp = policy.RLHyperparams(**{**asdict(RL_HP), "total_steps": 20_000})
    summary = runner.run_ablation("m", "push", str(desk.model_prefix), hp,
                                  seeds=[0, 1, 2], out_dir=tmp_path, workers=2)
    means = {v: s["mean"] for v, s in summary["values"].items()}
    have_all = set(means) == {"1", "3", "5", "10"}
    run_dirs = [tmp_path / f"m_{v}_seed{s}" for v in (1, 3, 5, 10) for s in (0, 1, 2)]
    dirs_exist = all((d / "curve.csv").exists() for d in run_dirs)
    ok = have_all and dirs_exist and means["3"] >= means["1"]
    report("m ablation harness", ok,
           f"runs for m in {sorted(means)}; push m=3 mean {means.get('3')} >= "
           f"m=1 mean {means.get('1')}")


# ---------------------------------------------------------------- criterion 9

def test_servo_tracking_bound():
    env = envs.make_env("reach")
    cfg = demos.ServoConfig()
    bound = cfg.tolerance + env.config.max_step
    rng = np.random.default_rng(9)
    checked = 0
    worst = 0.0
    for trial in range(40):
        state = env.reset(1.0, rng)
        # smooth obstacle-free trajectory starting at the current end-effector
        target = rng.uniform(env.ws.min + 0.03, env.ws.max - 0.03)
        wps = np.stack([state.ee_pos, (state.ee_pos + target) / 2.0
                        + rng.normal(0, 0.02, 3), target])
        traj = spline.resample_uniform(
            datagen.intent_trajectory(np.clip(wps, env.ws.min, env.ws.max), rng,
                                      wiggle=0.005), 100)
        demo = demos.servo(env, traj, cfg)
        if not demo.completed:
            continue
        checked += 1
        worst = max(worst, demos.max_tracking_deviation(demo, traj))
    ok = checked >= 30 and worst <= bound
    report("servo tracking", ok,
           f"max deviation {worst:.4f} m <= tolerance + max_step = {bound:.4f} m "
           f"({checked} completed runs)")


# --------------------------------------------------------------- criterion 10

def test_eq2_degeneracies():
    env = envs.make_env("reach")
    hp0 = policy.RLHyperparams(**{**asdict(RL_HP), "lam": 0.0, "batch": 32,
                                  "actor_hidden": (32, 32), "critic_hidden": (32, 32)})
    rng = np.random.default_rng(4)
    buf = policy.ReplayBuffer(2000, env.observation_dim, env.action_dim)
    env.reset(1.0, rng)
    for _ in range(80):
        if env.state.done:
            env.reset(1.0, rng)
        o = env.observe()
        p = env.state.ee_pos.copy()
        a = rng.uniform(-1, 1, 4).astype(np.float32)
        res = env.step(a)
        buf.add(p, o, a, res.reward, env.state.ee_pos.copy(), res.observation,
                float(res.done))
    disc = policy.Discriminator((32, 32), np.random.default_rng(5))
    agent_a = policy.TD3Agent(env.observation_dim, env.action_dim, hp0,
                              np.random.default_rng(7))
    agent_b = policy.TD3Agent(env.observation_dim, env.action_dim, hp0,
                              np.random.default_rng(7))
    for _ in range(6):
        policy.td3_update(agent_a, disc, buf, hp0, np.random.default_rng(11))
        policy.td3_update(agent_b, None, buf, hp0, np.random.default_rng(11))
    bitwise = all(np.array_equal(pa.data, pb.data) for pa, pb in
                  zip(agent_a.actor.params() + agent_a.critic_params(),
                      agent_b.actor.params() + agent_b.critic_params()))
    exact = abs(policy.augmented_reward(0.0, 0.5, 0.1) - 0.1 * np.log(0.5)) < 1e-12
    report("Eq.2 degeneracies", bitwise and exact,
           f"lambda=0 path bitwise equals plain TD3: {bitwise}; "
           f"augmented_reward(0, 0.5, 0.1) exact to 1e-12: {exact}")
