"""Sketch-to-3D trajectory generator.

Dual-view sketches are encoded by a shared VAE encoder into per-view Gaussian
latents; sampled codes are concatenated and an MLP head emits B-spline control
points, so the trajectory is a single matrix product with the precomputed
basis. Training combines trajectory MSE, sketch reconstruction MSE and a KLD
regularizer, fed by two augmentation streams: sketch-only transforms update
the VAE, paired sketch+trajectory perturbations update the whole model.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import datagen, geometry as geo, spline
from .errors import ConfigError, ContractError, ShapeError, TrainingDivergenceError
from .neural import (
    AdamState,
    LayerSpec,
    Sequential,
    adam_step,
    load_layers,
    mlp_specs,
    save_layers,
)
from .neural import tensor as T

LOGVAR_CLAMP = 10.0
SPACING_TOLERANCE = 0.02


@dataclass(frozen=True)
class GenHyperparams:
    lr: float = 1e-3
    batch: int = 128
    kld_weight: float = 1e-4
    epochs: int = 200
    n_tp: int = datagen.DEFAULT_N_TP
    latent_dim: int = 32
    n_cp: int = 20
    degree: int = 3
    image_size: int = 64
    mlp_hidden: tuple = (1024, 512, 256)
    encoder_channels: tuple = (16, 32, 64, 128)
    noise_scale: float = 1.0
    kld_anneal: bool = False
    val_fraction: float = 0.2
    use_vae: bool = True
    style_mode: str = "markers"
    seed: int = 0
    aug: datagen.AugmentParams = field(default_factory=datagen.AugmentParams)

    def __post_init__(self):
        if self.lr < 0 or self.batch < 1 or self.kld_weight < 0 or self.epochs < 0:
            raise ConfigError("hyperparameters must be positive")
        if self.image_size % 16 != 0:
            raise ConfigError("image_size must be divisible by 16 (four stride-2 convs)")


@dataclass
class LossBreakdown:
    total: float
    traj: float
    sketch: float
    kld: float

    def as_dict(self) -> dict:
        return {"total": self.total, "traj": self.traj, "sketch": self.sketch, "kld": self.kld}


class GeneratorModel:
    """Holds the encoder, latent heads, decoder, control-point MLP and basis."""

    def __init__(self, hp: GenHyperparams, rng: np.random.Generator,
                 workspace: geo.Workspace | None = None):
        self.hp = hp
        self.workspace = workspace
        ch = hp.encoder_channels
        side = hp.image_size // 16
        feat = ch[3] * side * side
        enc_specs = []
        prev = 3
        for c in ch:
            enc_specs.append(LayerSpec("conv2d", {"in_ch": prev, "out_ch": c,
                                                  "kernel": 4, "stride": 2, "pad": 1}))
            enc_specs.append(LayerSpec("relu"))
            prev = c
        enc_specs.append(LayerSpec("flatten"))
        self.encoder = Sequential.from_specs(enc_specs, rng)
        self.mu_head = Sequential.from_specs(
            [LayerSpec("dense", {"in_size": feat, "out_size": hp.latent_dim})], rng)
        self.logvar_head = Sequential.from_specs(
            [LayerSpec("dense", {"in_size": feat, "out_size": hp.latent_dim})], rng)
        dec_specs = [
            LayerSpec("dense", {"in_size": hp.latent_dim, "out_size": feat}),
            LayerSpec("reshape", {"shape": [side, side, ch[3]]}),
            LayerSpec("relu"),
        ]
        prev = ch[3]
        for c in (ch[2], ch[1], ch[0]):
            dec_specs.append(LayerSpec("transposed_conv2d",
                                       {"in_ch": prev, "out_ch": c, "kernel": 4,
                                        "stride": 2, "pad": 1}))
            dec_specs.append(LayerSpec("relu"))
            prev = c
        dec_specs.append(LayerSpec("transposed_conv2d",
                                   {"in_ch": prev, "out_ch": 3, "kernel": 4,
                                    "stride": 2, "pad": 1}))
        dec_specs.append(LayerSpec("sigmoid"))
        self.decoder = Sequential.from_specs(dec_specs, rng)
        self.mlp_head = Sequential.from_specs(
            mlp_specs([2 * hp.latent_dim, *hp.mlp_hidden, hp.n_cp * 3]), rng)
        knots = spline.make_uniform_knots(hp.n_cp, hp.degree)
        self.basis = spline.basis_matrix(knots, hp.n_tp)
        self._w32 = self.basis.entries.astype(np.float32)

    def nets(self) -> list[Sequential]:
        return [self.encoder, self.mu_head, self.logvar_head, self.decoder, self.mlp_head]

    def vae_params(self):
        return [p for net in (self.encoder, self.mu_head, self.logvar_head, self.decoder)
                for p in net.params()]

    def all_params(self):
        return [p for net in self.nets() for p in net.params()]

    def zero_grad(self):
        for p in self.all_params():
            p.grad = None


# ---- core graph -------------------------------------------------------------

def _check_image(model: GeneratorModel, img: geo.SketchImage):
    if img.size != model.hp.image_size:
        raise ShapeError(f"image size {img.size} != model size {model.hp.image_size}")


def _encode_t(model: GeneratorModel, x: T.Tensor) -> tuple[T.Tensor, T.Tensor]:
    feats = model.encoder(x)
    mu = model.mu_head(feats)
    logvar = T.clamp(model.logvar_head(feats), -LOGVAR_CLAMP, LOGVAR_CLAMP)
    return mu, logvar


def _reparam_t(mu: T.Tensor, logvar: T.Tensor, eps: np.ndarray, noise_scale: float) -> T.Tensor:
    if noise_scale == 0.0:
        return mu
    std = T.exp(T.scale(logvar, 0.5))
    return T.add(mu, T.mul(std, T.Tensor(eps.astype(mu.dtype) * noise_scale)))


def _decode_t(model: GeneratorModel, z: T.Tensor) -> T.Tensor:
    return model.decoder(z)


def _head_t(model: GeneratorModel, z1: T.Tensor, z2: T.Tensor) -> tuple[T.Tensor, T.Tensor]:
    out = model.mlp_head(T.concat([z1, z2], axis=1))
    ctrl = T.reshape(out, (out.shape[0], model.hp.n_cp, 3))
    w = model._w32 if ctrl.dtype == np.float32 else model.basis.entries
    traj = T.matmul(T.Tensor(w), ctrl)
    return ctrl, traj


def _kld_t(mu: T.Tensor, logvar: T.Tensor) -> T.Tensor:
    """Standard Gaussian KLD summed over dims, averaged over the batch."""
    batch = mu.shape[0]
    inner = T.sub(T.add(T.Tensor(mu.dtype.type(1.0)), logvar),
                  T.add(T.square(mu), T.exp(logvar)))
    return T.scale(T.tsum(inner), -0.5 / batch)


def _graph(model: GeneratorModel, x1: np.ndarray, x2: np.ndarray,
           eps1: np.ndarray | None, eps2: np.ndarray | None, noise_scale: float,
           decode: bool = True, head: bool = True) -> dict:
    """Both views ride through the shared encoder/decoder as one stacked batch."""
    b = x1.shape[0]
    stacked = T.Tensor(np.concatenate([x1, x2], axis=0))
    mu_all, lv_all = _encode_t(model, stacked)
    if eps1 is not None:
        eps = np.concatenate([eps1, eps2], axis=0)
        z_all = _reparam_t(mu_all, lv_all, eps, noise_scale)
    else:
        z_all = mu_all
    out = {
        "mu1": T.narrow(mu_all, 0, b), "logvar1": T.narrow(lv_all, 0, b),
        "mu2": T.narrow(mu_all, b, b), "logvar2": T.narrow(lv_all, b, b),
        "mu_all": mu_all, "logvar_all": lv_all, "z_all": z_all,
    }
    out["z1"] = T.narrow(z_all, 0, b)
    out["z2"] = T.narrow(z_all, b, b)
    if decode and model.hp.use_vae:
        recon_all = _decode_t(model, z_all)
        out["recon_all"] = recon_all
        out["recon1"] = T.narrow(recon_all, 0, b)
        out["recon2"] = T.narrow(recon_all, b, b)
    if head:
        out["ctrl"], out["traj"] = _head_t(model, out["z1"], out["z2"])
    return out


def _loss_t(model: GeneratorModel, graph: dict, x1, x2, target_traj, beta: float,
            traj_term: bool = True) -> dict:
    dtype = graph["mu1"].dtype
    zero = T.Tensor(dtype.type(0.0))
    sketch = zero
    kld = zero
    if model.hp.use_vae and "recon_all" in graph:
        # stacked-view means equal the average of the two per-view means
        target = np.concatenate([x1, x2], axis=0)
        sketch = T.mse(graph["recon_all"], T.Tensor(target))
        kld = _kld_t(graph["mu_all"], graph["logvar_all"])
    traj = zero
    if traj_term:
        traj = T.mse(graph["traj"], T.Tensor(np.asarray(target_traj, dtype=dtype)))
    total = T.add(T.add(traj, sketch), T.scale(kld, beta))
    return {"total": total, "traj": traj, "sketch": sketch, "kld": kld}


def _breakdown(losses: dict) -> LossBreakdown:
    return LossBreakdown(total=float(losses["total"].data), traj=float(losses["traj"].data),
                         sketch=float(losses["sketch"].data), kld=float(losses["kld"].data))


# ---- public operations ------------------------------------------------------

def encode(model: GeneratorModel, img: geo.SketchImage) -> tuple[np.ndarray, np.ndarray]:
    """Posterior mean and log-variance for one sketch."""
    _check_image(model, img)
    with T.no_grad():
        mu, lv = _encode_t(model, T.Tensor(img.to_float()[None]))
    return mu.data[0].copy(), lv.data[0].copy()


def reparameterize(mu: np.ndarray, logvar: np.ndarray, rng: np.random.Generator,
                   noise_scale: float = 1.0) -> np.ndarray:
    """z = mu + noise_scale * std * eps with eps ~ N(0, I)."""
    if noise_scale < 0:
        raise ConfigError("noise_scale must be >= 0")
    if mu.shape != logvar.shape:
        raise ShapeError("mu/logvar shape mismatch")
    if noise_scale == 0.0:
        return mu.copy()
    eps = rng.standard_normal(mu.shape)
    return mu + noise_scale * np.exp(0.5 * logvar) * eps


@dataclass
class GeneratorOutput:
    recon1: geo.SketchImage | None
    recon2: geo.SketchImage | None
    control_points: spline.ControlPoints
    trajectory: spline.Trajectory3D
    mu1: np.ndarray
    logvar1: np.ndarray
    mu2: np.ndarray
    logvar2: np.ndarray


def forward(model: GeneratorModel, img1: geo.SketchImage, img2: geo.SketchImage,
            rng: np.random.Generator | None = None, noise_scale: float = 0.0) -> GeneratorOutput:
    """Full inference pass on one sketch pair."""
    _check_image(model, img1)
    _check_image(model, img2)
    x1 = img1.to_float()[None]
    x2 = img2.to_float()[None]
    if noise_scale > 0.0:
        if rng is None:
            raise ConfigError("noise_scale > 0 needs an rng")
        eps1 = rng.standard_normal((1, model.hp.latent_dim))
        eps2 = rng.standard_normal((1, model.hp.latent_dim))
    else:
        eps1 = eps2 = None
    with T.no_grad():
        g = _graph(model, x1, x2, eps1, eps2, noise_scale)
    recon1 = geo.SketchImage.from_float(g["recon1"].data[0]) if "recon1" in g else None
    recon2 = geo.SketchImage.from_float(g["recon2"].data[0]) if "recon2" in g else None
    return GeneratorOutput(
        recon1=recon1, recon2=recon2,
        control_points=spline.ControlPoints(g["ctrl"].data[0].astype(np.float64)),
        trajectory=spline.Trajectory3D(g["traj"].data[0].astype(np.float64)),
        mu1=g["mu1"].data[0].copy(), logvar1=g["logvar1"].data[0].copy(),
        mu2=g["mu2"].data[0].copy(), logvar2=g["logvar2"].data[0].copy(),
    )


def loss(model: GeneratorModel, out: GeneratorOutput, target1: geo.SketchImage,
         target2: geo.SketchImage, target_traj: spline.Trajectory3D,
         beta: float | None = None) -> LossBreakdown:
    """Loss terms for a single example; target trajectory must be resampled."""
    if beta is None:
        beta = model.hp.kld_weight
    if len(target_traj) != model.hp.n_tp:
        raise ContractError(f"target trajectory must have n_tp={model.hp.n_tp} points")
    if spline.spacing_nonuniformity(target_traj.points) > SPACING_TOLERANCE:
        raise ContractError("target trajectory is not uniformly resampled")
    with T.no_grad():
        traj = T.mse(T.Tensor(out.trajectory.points), T.Tensor(target_traj.points))
        sketch = T.Tensor(np.float64(0.0))
        kld = T.Tensor(np.float64(0.0))
        if model.hp.use_vae and out.recon1 is not None:
            sketch = T.scale(T.add(T.mse(T.Tensor(out.recon1.to_float()),
                                         T.Tensor(target1.to_float())),
                                   T.mse(T.Tensor(out.recon2.to_float()),
                                         T.Tensor(target2.to_float()))), 0.5)
            k1 = -0.5 * np.sum(1.0 + out.logvar1 - out.mu1 ** 2 - np.exp(out.logvar1))
            k2 = -0.5 * np.sum(1.0 + out.logvar2 - out.mu2 ** 2 - np.exp(out.logvar2))
            kld = T.Tensor(np.float64((k1 + k2) / 2.0))
    t, s, k = float(traj.data), float(sketch.data), float(kld.data)
    return LossBreakdown(total=t + s + beta * k, traj=t, sketch=s, kld=k)


def sample_trajectories(model: GeneratorModel, img1: geo.SketchImage, img2: geo.SketchImage,
                        m: int, noise_scale: float | None = None,
                        rng: np.random.Generator | None = None) -> list[spline.Trajectory3D]:
    """m trajectories from one sketch pair by re-sampling the latent noise."""
    if m < 1:
        raise ConfigError(f"need m >= 1, got {m}")
    if noise_scale is None:
        noise_scale = model.hp.noise_scale
    out = []
    for _ in range(m):
        out.append(forward(model, img1, img2, rng, noise_scale).trajectory)
    return out


def interpolate_latent(model: GeneratorModel, pair_a: tuple, pair_b: tuple,
                       steps: int) -> list[GeneratorOutput]:
    """Linear latent interpolation between two sketch pairs (posterior means)."""
    if steps < 2:
        raise ConfigError(f"need steps >= 2, got {steps}")
    za = [encode(model, img)[0] for img in pair_a]
    zb = [encode(model, img)[0] for img in pair_b]
    results = []
    for i in range(steps):
        t = i / (steps - 1)
        z1 = (1.0 - t) * za[0] + t * zb[0]
        z2 = (1.0 - t) * za[1] + t * zb[1]
        with T.no_grad():
            z1t = T.Tensor(z1[None].astype(np.float32))
            z2t = T.Tensor(z2[None].astype(np.float32))
            recon1 = _decode_t(model, z1t) if model.hp.use_vae else None
            recon2 = _decode_t(model, z2t) if model.hp.use_vae else None
            ctrl, traj = _head_t(model, z1t, z2t)
        results.append(GeneratorOutput(
            recon1=geo.SketchImage.from_float(recon1.data[0]) if recon1 is not None else None,
            recon2=geo.SketchImage.from_float(recon2.data[0]) if recon2 is not None else None,
            control_points=spline.ControlPoints(ctrl.data[0].astype(np.float64)),
            trajectory=spline.Trajectory3D(traj.data[0].astype(np.float64)),
            mu1=z1, logvar1=np.zeros_like(z1), mu2=z2, logvar2=np.zeros_like(z2),
        ))
    return results


# ---- training ---------------------------------------------------------------

def _to_float_batch(sketches_u8: np.ndarray) -> np.ndarray:
    return sketches_u8.astype(np.float32) / 255.0


def validation_metrics(model: GeneratorModel, data: datagen.DatasetArrays,
                       indices: np.ndarray, batch: int = 128) -> dict:
    """Deterministic (posterior-mean) trajectory and reconstruction MSE."""
    traj_se = 0.0
    sketch_se = 0.0
    n = 0
    for lo in range(0, len(indices), batch):
        idx = indices[lo:lo + batch]
        x1 = _to_float_batch(data.sketches1[idx])
        x2 = _to_float_batch(data.sketches2[idx])
        with T.no_grad():
            g = _graph(model, x1, x2, None, None, 0.0, decode=True, head=True)
        traj_se += float(((g["traj"].data.astype(np.float64)
                           - data.trajectories[idx]) ** 2).mean(axis=(1, 2)).sum())
        if "recon1" in g:
            se1 = ((g["recon1"].data - x1) ** 2).mean(axis=(1, 2, 3))
            se2 = ((g["recon2"].data - x2) ** 2).mean(axis=(1, 2, 3))
            sketch_se += float((se1 + se2).sum() / 2.0)
        n += len(idx)
    return {"traj_mse": traj_se / n, "sketch_mse": sketch_se / n}


def train(model: GeneratorModel, data: datagen.DatasetArrays, hp: GenHyperparams | None = None,
          rng: np.random.Generator | None = None, log_fn=None) -> list[dict]:
    """Dual-stream training; returns a per-epoch history of both streams."""
    from .neural.tuning import enable_malloc_reuse

    enable_malloc_reuse()
    if hp is None:
        hp = model.hp
    if rng is None:
        rng = np.random.default_rng(hp.seed)
    if len(data) < 1:
        raise ConfigError("dataset is empty")
    for traj in data.trajectories:
        if traj.shape[0] != hp.n_tp:
            raise ContractError(f"dataset trajectories must have n_tp={hp.n_tp} points")
        if spline.spacing_nonuniformity(traj) > SPACING_TOLERANCE:
            raise ContractError("dataset trajectory is not uniformly resampled")

    n = len(data)
    perm = rng.permutation(n)
    n_val = int(round(n * hp.val_fraction))
    val_idx = perm[:n_val]
    train_idx = perm[n_val:]
    if len(train_idx) == 0:
        raise ConfigError("no training records after validation split")

    adam_vae = AdamState(lr=hp.lr)
    adam_full = AdamState(lr=hp.lr)
    vae_params = model.vae_params()
    full_params = model.all_params()
    history = []

    for epoch in range(hp.epochs):
        if hp.kld_anneal:
            ramp = max(1, int(np.ceil(hp.epochs * 0.2)))
            beta = hp.kld_weight * min(1.0, (epoch + 1) / ramp)
        else:
            beta = hp.kld_weight
        order = rng.permutation(len(train_idx))
        s1_acc = np.zeros(4)
        s2_acc = np.zeros(4)
        n_batches = 0
        for lo in range(0, len(order), hp.batch):
            idx = train_idx[order[lo:lo + hp.batch]]
            bsz = len(idx)
            # stream 1: sketch-only augmentation updates the VAE alone
            if hp.use_vae:
                aug1 = datagen.augment_sketch_batch(data.sketches1[idx], rng, hp.aug,
                                                    quantize=False)
                aug2 = datagen.augment_sketch_batch(data.sketches2[idx], rng, hp.aug,
                                                    quantize=False)
                eps1 = rng.standard_normal((bsz, hp.latent_dim))
                eps2 = rng.standard_normal((bsz, hp.latent_dim))
                g = _graph(model, aug1, aug2, eps1, eps2, 1.0, decode=True, head=False)
                losses = _loss_t(model, g, aug1, aug2, None, beta, traj_term=False)
                model.zero_grad()
                losses["total"].backward()
                adam_step(adam_vae, vae_params)
                b = _breakdown(losses)
                s1_acc += [b.total, b.traj, b.sketch, b.kld]
                if not np.isfinite(b.total):
                    raise TrainingDivergenceError(f"stream-1 loss diverged at epoch {epoch}")

            # stream 2: paired augmentation updates everything
            aug1, aug2, tgt = datagen.augment_pair_batch(
                data.sketches1[idx], data.sketches2[idx], data.trajectories[idx],
                rng, hp.aug, data.workspace, quantize=False)
            if hp.use_vae:
                eps1 = rng.standard_normal((bsz, hp.latent_dim))
                eps2 = rng.standard_normal((bsz, hp.latent_dim))
            else:
                eps1 = eps2 = None
            g = _graph(model, aug1, aug2, eps1, eps2, 1.0 if hp.use_vae else 0.0)
            losses = _loss_t(model, g, aug1, aug2, tgt, beta)
            model.zero_grad()
            losses["total"].backward()
            adam_step(adam_full, full_params)
            b = _breakdown(losses)
            s2_acc += [b.total, b.traj, b.sketch, b.kld]
            if not np.isfinite(b.total):
                raise TrainingDivergenceError(f"stream-2 loss diverged at epoch {epoch}")
            n_batches += 1

        last_epoch = epoch == hp.epochs - 1
        val = validation_metrics(model, data, val_idx) \
            if n_val and (epoch % 5 == 4 or last_epoch or epoch == 0) else {}
        entry = {
            "epoch": epoch,
            "beta": beta,
            "stream1": LossBreakdown(*(s1_acc / max(n_batches, 1))),
            "stream2": LossBreakdown(*(s2_acc / max(n_batches, 1))),
            **{f"val_{k}": v for k, v in val.items()},
        }
        history.append(entry)
        if log_fn:
            log_fn(entry)
    return history


def gradient_check_graph(model: GeneratorModel, seed: int = 0, fd_eps: float = 1e-4) -> float:
    """Max relative error of the full-graph backward pass vs central differences.

    The finite-difference reference runs on a float64 shadow copy so the
    number reflects the accuracy of the (default 32-bit) backward pass.
    Parameters are jittered first: zero-initialized biases otherwise park
    ReLU pre-activations exactly on their kink, where the subgradient
    convention and central differences legitimately disagree.
    """
    import copy

    n_params = sum(p.data.size for p in model.all_params())
    if n_params > 20_000:
        raise ConfigError(f"reduce the model for gradient checks ({n_params} params)")
    rng = np.random.default_rng(seed)
    for p in model.all_params():
        p.data = p.data + rng.normal(0.0, 1e-2, size=p.data.shape).astype(p.data.dtype)
    x1 = rng.uniform(0, 1, (1, model.hp.image_size, model.hp.image_size, 3)).astype(np.float32)
    x2 = rng.uniform(0, 1, (1, model.hp.image_size, model.hp.image_size, 3)).astype(np.float32)
    eps1 = rng.standard_normal((1, model.hp.latent_dim))
    eps2 = rng.standard_normal((1, model.hp.latent_dim))
    tgt = rng.uniform(0, 1, (1, model.hp.n_tp, 3))

    def total_loss(m, xa, xb):
        g = _graph(m, xa, xb, eps1, eps2, 1.0)
        return _loss_t(m, g, xa, xb, tgt, m.hp.kld_weight)["total"]

    model.zero_grad()
    total_loss(model, x1, x2).backward()
    bp = [p.grad if p.grad is not None else np.zeros_like(p.data) for p in model.all_params()]

    shadow = copy.copy(model)
    shadow.encoder = model.encoder.astype(np.float64)
    shadow.mu_head = model.mu_head.astype(np.float64)
    shadow.logvar_head = model.logvar_head.astype(np.float64)
    shadow.decoder = model.decoder.astype(np.float64)
    shadow.mlp_head = model.mlp_head.astype(np.float64)
    x1d, x2d = x1.astype(np.float64), x2.astype(np.float64)

    # pin the ReLU active-sets at the base point: the backward pass computes
    # the gradient of exactly that piecewise-linear selection
    pin = T.ReluMaskPin()
    with pin, T.no_grad():
        total_loss(shadow, x1d, x2d)

    worst = 0.0
    for p, g in zip(shadow.all_params(), bp):
        flat = p.data.reshape(-1)
        bpf = g.reshape(-1).astype(np.float64)
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + fd_eps
            with pin.replay(), T.no_grad():
                hi = float(total_loss(shadow, x1d, x2d).data)
            flat[j] = orig - fd_eps
            with pin.replay(), T.no_grad():
                lo = float(total_loss(shadow, x1d, x2d).data)
            flat[j] = orig
            fd = (hi - lo) / (2.0 * fd_eps)
            err = abs(fd - bpf[j]) / max(abs(fd) + abs(bpf[j]), 1e-6)
            worst = max(worst, err)
    return worst


# ---- persistence ------------------------------------------------------------

def save_generator(model: GeneratorModel, prefix) -> None:
    """Write <prefix>.bin (weights) and <prefix>.json (hyperparams sidecar)."""
    prefix = Path(prefix)
    save_layers(prefix.with_suffix(".bin"), model.nets())
    hp = asdict(model.hp)
    hp["aug"] = asdict(model.hp.aug)
    sidecar = {"format": 1, "hyperparams": hp}
    if model.workspace is not None:
        sidecar["workspace"] = [list(model.workspace.min), list(model.workspace.max)]
    prefix.with_suffix(".json").write_text(json.dumps(sidecar, indent=2))


def load_generator(prefix) -> GeneratorModel:
    prefix = Path(prefix)
    sidecar = json.loads(prefix.with_suffix(".json").read_text())
    hp_dict = sidecar["hyperparams"]
    aug = datagen.AugmentParams(**{k: tuple(v) if isinstance(v, list) else v
                                   for k, v in hp_dict.pop("aug").items()})
    hp_dict = {k: tuple(v) if isinstance(v, list) else v for k, v in hp_dict.items()}
    hp = GenHyperparams(aug=aug, **hp_dict)
    ws = None
    if "workspace" in sidecar:
        ws = geo.Workspace(min=np.array(sidecar["workspace"][0]),
                           max=np.array(sidecar["workspace"][1]))
    model = GeneratorModel(hp, np.random.default_rng(0), workspace=ws)
    load_layers(prefix.with_suffix(".bin"), model.nets())
    return model
