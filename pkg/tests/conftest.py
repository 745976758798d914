import json
import os
import sys
import time
from pathlib import Path

import numpy as np
import pytest

# make tests/oracles.py importable from any test module
sys.path.insert(0, str(Path(__file__).parent))

DESK_CACHE = Path(__file__).parent.parent / ".cache" / "desk"
DESK_SEED = 20260809


class DeskArtifacts:
    """Desk-scale dataset, trained generator, CNN-only ablation, and metrics."""

    def __init__(self, data, model, cnn_model, metrics):
        self.data = data
        self.model = model
        self.cnn_model = cnn_model
        self.metrics = metrics
        self.model_prefix = DESK_CACHE / "model"


def _build_desk_dataset():
    from sketchrl import datagen, envs, geometry as geo

    ws = envs.default_task_config("reach").workspace()
    cfg = datagen.PlayConfig(workspace=ws, seed=DESK_SEED)
    manifest = DESK_CACHE / "dataset" / "play" / "manifest.json"
    if not manifest.exists():
        datagen.build_dataset(2000, cfg, geo.SketchStyle(), DESK_CACHE / "dataset",
                              name="play")
    return datagen.load_dataset(manifest)


def _train_desk(data):
    from sketchrl import generator as gen

    ws = data.workspace
    metrics = {}
    hp = gen.GenHyperparams(epochs=60, seed=0)
    model = gen.GeneratorModel(hp, np.random.default_rng(0), workspace=ws)
    t0 = time.time()
    gen.train(model, data, hp, np.random.default_rng(0))
    metrics["train_seconds"] = time.time() - t0
    gen.save_generator(model, DESK_CACHE / "model")

    rng = np.random.default_rng(0)
    perm = rng.permutation(len(data))
    n_val = int(round(len(data) * hp.val_fraction))
    val_idx, train_idx = perm[:n_val], perm[n_val:]
    vm = gen.validation_metrics(model, data, val_idx)
    metrics["val_traj_mse"] = vm["traj_mse"]
    metrics["vae_val_sketch_mse"] = vm["sketch_mse"]
    mean_traj = data.trajectories[train_idx].mean(axis=0)
    metrics["baseline_mse"] = float(((data.trajectories[val_idx] - mean_traj) ** 2).mean())

    hp_cnn = gen.GenHyperparams(epochs=60, seed=0, use_vae=False)
    cnn = gen.GeneratorModel(hp_cnn, np.random.default_rng(0), workspace=ws)
    t0 = time.time()
    gen.train(cnn, data, hp_cnn, np.random.default_rng(0))
    metrics["cnn_train_seconds"] = time.time() - t0
    gen.save_generator(cnn, DESK_CACHE / "cnn_model")
    object.__setattr__(cnn.hp, "use_vae", True)
    metrics["cnn_val_sketch_mse"] = gen.validation_metrics(cnn, data, val_idx)["sketch_mse"]
    object.__setattr__(cnn.hp, "use_vae", False)
    (DESK_CACHE / "metrics.json").write_text(json.dumps(metrics, indent=2))
    return model, cnn, metrics


@pytest.fixture(scope="session")
def desk():
    """Desk-scale artifacts for the acceptance criteria.

    Training takes ~30 minutes; with SKETCHRL_ACCEPT_CACHE=1 a previously
    trained checkpoint under .cache/desk is reused (development mode — the
    recorded metrics are asserted as-is).
    """
    from sketchrl import generator as gen

    data = _build_desk_dataset()
    use_cache = os.environ.get("SKETCHRL_ACCEPT_CACHE") == "1"
    metrics_path = DESK_CACHE / "metrics.json"
    if use_cache and metrics_path.exists():
        model = gen.load_generator(DESK_CACHE / "model")
        cnn = gen.load_generator(DESK_CACHE / "cnn_model")
        metrics = json.loads(metrics_path.read_text())
    else:
        model, cnn, metrics = _train_desk(data)
    return DeskArtifacts(data=data, model=model, cnn_model=cnn, metrics=metrics)
