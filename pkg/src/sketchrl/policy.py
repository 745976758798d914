"""Policy learning: BC pretraining, TD3 with a Q-ensemble and IL/RL action
selection, and a discriminator that shapes the sparse reward toward
demonstration-like motion.

The action space is the normalized [-1, 1]^4 vector the environments accept.
Reward shaping recomputes r + lambda * log D(p, dp, g) at update time from the
current discriminator; with lambda = 0 the update path is bit-identical to
plain TD3 on the same batch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .demos import DemoSet
from .envs import Env
from .errors import ConfigError, StateError
from .neural import AdamState, Dense, Dropout, ReLU, Sequential, Tanh, adam_step, mlp_specs
from .neural import tensor as T

DISC_LOGIT_CLAMP = 15.0


@dataclass(frozen=True)
class RLHyperparams:
    lr: float = 1e-4
    batch: int = 256
    gamma: float = 0.99
    exploration_std: float = 0.1   # sigma
    noise_clip: float = 0.3        # c, applied to target-policy smoothing noise
    ema: float = 0.99              # rho
    update_freq: int = 2           # U
    actor_dropout: float = 0.5
    ensemble: int = 2              # E
    critic_updates: int = 1        # G
    lam: float = 0.05              # discriminator reward weight
    m: int = 3                     # trajectories generated per sketch pair
    n_sketches: int = 10
    total_steps: int = 30_000      # N
    eval_interval: int = 1_000
    eval_episodes: int = 20
    buffer_capacity: int = 100_000
    actor_hidden: tuple = (256, 256)
    critic_hidden: tuple = (256, 256)
    disc_hidden: tuple = (128, 128)
    bc_hidden: tuple = (256, 256)
    recent_window: int = 2_048
    disc_lr: float = 1e-5  # slow ascent keeps D uncertain on the small demo set
    randomization_level: float = 1.0
    eval_q_filter: bool = True     # eval-time IL/RL choice also goes through Q
    seed: int = 0

    def __post_init__(self):
        if self.lam < 0:
            raise ConfigError("lambda must be >= 0")
        if self.ensemble < 2:
            raise ConfigError("need a Q-ensemble of at least 2")


def _mlp_forward_np(net: Sequential, x: np.ndarray) -> np.ndarray:
    """Plain-numpy forward for dense stacks (rollout hot path, no tape)."""
    for layer in net.layers:
        if isinstance(layer, Dense):
            x = x @ layer.w.data + layer.b.data
        elif isinstance(layer, ReLU):
            x = np.maximum(x, 0)
        elif isinstance(layer, Tanh):
            x = np.tanh(x)
        elif isinstance(layer, Dropout):
            continue  # eval mode
        else:
            raise StateError(f"unsupported layer in fast path: {layer!r}")
    return x


# ---- behavior cloning -------------------------------------------------------

@dataclass(frozen=True)
class BCTrainConfig:
    lr: float = 1e-3
    batch: int = 256
    epochs: int = 300


class BCPolicy:
    """MSE-regression policy from observations to demonstrated actions."""

    def __init__(self, obs_dim: int, act_dim: int, hidden: tuple,
                 rng: np.random.Generator):
        self.obs_dim = obs_dim
        self.act_dim = act_dim
        self.net = Sequential.from_specs(
            mlp_specs([obs_dim, *hidden, act_dim], out_activation="tanh"), rng)

    def act(self, obs: np.ndarray) -> np.ndarray:
        return _mlp_forward_np(self.net, obs.astype(np.float32)[None])[0]


def bc_train(demos: DemoSet, obs_dim: int, act_dim: int,
             cfg: BCTrainConfig = BCTrainConfig(),
             hidden: tuple = (256, 256),
             rng: np.random.Generator | None = None) -> tuple[BCPolicy, list]:
    """Fit the IL policy by MSE regression over all demo transitions."""
    if len(demos) == 0 or not demos.all_transitions():
        raise ConfigError("cannot train BC on an empty demo set")
    if rng is None:
        rng = np.random.default_rng(0)
    arrays = demos.arrays()
    obs = arrays["o"]
    act = np.clip(arrays["a"], -1.0, 1.0)
    policy = BCPolicy(obs_dim, act_dim, hidden, rng)
    adam = AdamState(lr=cfg.lr)
    params = policy.net.params()
    history = []
    n = len(obs)
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        batches = 0
        for lo in range(0, n, cfg.batch):
            idx = order[lo:lo + cfg.batch]
            out = policy.net(T.Tensor(obs[idx]))
            loss = T.mse(out, T.Tensor(act[idx]))
            policy.net.zero_grad()
            loss.backward()
            adam_step(adam, params)
            epoch_loss += float(loss.data)
            batches += 1
        history.append(epoch_loss / batches)
    return policy, history


# ---- discriminator ----------------------------------------------------------

class Discriminator:
    """Scores (position, normalized step direction, goal) tuples in (0, 1)."""

    def __init__(self, hidden: tuple, rng: np.random.Generator, feat_dim: int = 9):
        self.feat_dim = feat_dim
        self.net = Sequential.from_specs(mlp_specs([feat_dim, *hidden, 1]), rng)

    def logits_t(self, feats: T.Tensor) -> T.Tensor:
        return T.clamp(self.net(feats), -DISC_LOGIT_CLAMP, DISC_LOGIT_CLAMP)

    def prob(self, feats: np.ndarray) -> np.ndarray:
        logits = np.clip(_mlp_forward_np(self.net, feats.astype(np.float32)),
                         -DISC_LOGIT_CLAMP, DISC_LOGIT_CLAMP)
        return 1.0 / (1.0 + np.exp(-logits[:, 0]))


def discriminator_features(p: np.ndarray, p_next: np.ndarray, g: np.ndarray) -> np.ndarray:
    """(p, normalized step direction, goal); zero direction for stationary steps."""
    single = np.asarray(p).ndim == 1
    p = np.atleast_2d(np.asarray(p, dtype=np.float64))
    p_next = np.atleast_2d(np.asarray(p_next, dtype=np.float64))
    g = np.atleast_2d(np.asarray(g, dtype=np.float64))
    diff = p_next - p
    norm = np.linalg.norm(diff, axis=1, keepdims=True)
    dp = diff / np.maximum(norm, 1e-8)
    feats = np.concatenate([p, dp, g], axis=1).astype(np.float32)
    return feats[0] if single else feats


def discriminator_update(disc: Discriminator, demo_feats: np.ndarray,
                         policy_feats: np.ndarray, adam: AdamState) -> float:
    """One ascent step on E_demo[log D] + E_policy[log(1 - D)]; returns that value."""
    if len(demo_feats) == 0 or len(policy_feats) == 0:
        raise ConfigError("both discriminator batches must be nonempty")
    ld = disc.logits_t(T.Tensor(np.asarray(demo_feats, dtype=np.float32)))
    lp = disc.logits_t(T.Tensor(np.asarray(policy_feats, dtype=np.float32)))
    # maximize the objective == minimize BCE with labels demo=1, policy=0;
    # log(1 - sigmoid(x)) == log(sigmoid(-x))
    objective = T.add(T.tmean(T.log(T.sigmoid(ld))),
                      T.tmean(T.log(T.sigmoid(T.neg(lp)))))
    loss = T.neg(objective)
    disc.net.zero_grad()
    loss.backward()
    adam_step(adam, disc.net.params())
    return float(objective.data)


def augmented_reward(r: float, d_out: float, lam: float) -> float:
    """Eq.-style shaped reward: r + lam * ln(D)."""
    if lam == 0.0:
        return float(r)
    return float(r) + lam * math.log(d_out)


# ---- TD3 agent ---------------------------------------------------------------

class TD3Agent:
    def __init__(self, obs_dim: int, act_dim: int, hp: RLHyperparams,
                 rng: np.random.Generator):
        self.obs_dim = obs_dim
        self.act_dim = act_dim
        self.hp = hp
        self.actor = Sequential.from_specs(
            mlp_specs([obs_dim, *hp.actor_hidden, act_dim], out_activation="tanh",
                      hidden_dropout=hp.actor_dropout), rng)
        self.critics = [Sequential.from_specs(
            mlp_specs([obs_dim + act_dim, *hp.critic_hidden, 1]), rng)
            for _ in range(hp.ensemble)]
        self.actor_target = self.actor.copy()
        self.critic_targets = [c.copy() for c in self.critics]
        self.adam_actor = AdamState(lr=hp.lr)
        self.adam_critics = AdamState(lr=hp.lr)
        self.update_count = 0

    def critic_params(self):
        return [p for c in self.critics for p in c.params()]

    def act(self, obs: np.ndarray) -> np.ndarray:
        return _mlp_forward_np(self.actor, obs.astype(np.float32)[None])[0]

    def q_values(self, obs: np.ndarray, act: np.ndarray, indices) -> np.ndarray:
        x = np.concatenate([obs, act]).astype(np.float32)[None]
        return np.array([_mlp_forward_np(self.critics[k], x)[0, 0] for k in indices])

    def ema_update(self, rho: float) -> None:
        pairs = list(zip(self.actor_target.params(), self.actor.params()))
        for tgt, src in zip(self.critic_targets, self.critics):
            pairs.extend(zip(tgt.params(), src.params()))
        for t, s in pairs:
            t.data *= rho
            t.data += (1.0 - rho) * s.data


class ReplayBuffer:
    """Ring buffer of transitions, seeded with demonstrations at index 0."""

    def __init__(self, capacity: int, obs_dim: int, act_dim: int):
        self.capacity = capacity
        self.p = np.zeros((capacity, 3), dtype=np.float32)
        self.o = np.zeros((capacity, obs_dim), dtype=np.float32)
        self.a = np.zeros((capacity, act_dim), dtype=np.float32)
        self.r = np.zeros(capacity, dtype=np.float32)
        self.p_next = np.zeros((capacity, 3), dtype=np.float32)
        self.o_next = np.zeros((capacity, obs_dim), dtype=np.float32)
        self.done = np.zeros(capacity, dtype=np.float32)
        self.size = 0
        self.ptr = 0
        self.demo_count = 0

    def add(self, p, o, a, r, p_next, o_next, done) -> None:
        i = self.ptr
        self.p[i] = p
        self.o[i] = o
        self.a[i] = a
        self.r[i] = r
        self.p_next[i] = p_next
        self.o_next[i] = o_next
        self.done[i] = done
        self.ptr = (self.ptr + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def seed_demos(self, demos: DemoSet) -> int:
        arrays = demos.arrays()
        for j in range(len(arrays["r"])):
            self.add(arrays["p"][j], arrays["o"][j], np.clip(arrays["a"][j], -1, 1),
                     arrays["r"][j], arrays["p_next"][j], arrays["o_next"][j],
                     arrays["done"][j])
        self.demo_count = self.size
        return self.demo_count

    def sample(self, batch: int, rng: np.random.Generator) -> dict:
        idx = rng.integers(0, self.size, size=batch)
        return {k: getattr(self, k)[idx] for k in
                ("p", "o", "a", "r", "p_next", "o_next", "done")}

    def recent_online(self, window: int) -> np.ndarray:
        """Indices of the most recent online (non-demo) transitions."""
        n_online = self.size - self.demo_count
        if n_online <= 0:
            return np.empty(0, dtype=np.int64)
        take = min(window, n_online)
        end = self.ptr if self.ptr > self.demo_count or self.size < self.capacity \
            else self.ptr + self.capacity
        idx = (np.arange(end - take, end)) % self.capacity
        return idx


# ---- action selection --------------------------------------------------------

def select_action(agent: TD3Agent, bc: BCPolicy | None, obs: np.ndarray,
                  rng: np.random.Generator, mode: str = "train",
                  hp: RLHyperparams | None = None) -> tuple[np.ndarray, str]:
    """IL/RL proposal comparison: act with whichever has the higher pessimistic Q."""
    if hp is None:
        hp = agent.hp
    a_rl = agent.act(obs)
    if mode == "train" and hp.exploration_std > 0:
        a_rl = a_rl + rng.normal(0.0, hp.exploration_std, size=a_rl.shape)
    a_rl = np.clip(a_rl, -1.0, 1.0).astype(np.float32)
    if bc is None:
        return a_rl, "rl"
    if mode == "eval" and not hp.eval_q_filter:
        return a_rl, "rl"
    a_il = np.clip(bc.act(obs), -1.0, 1.0).astype(np.float32)
    if hp.ensemble == 2:
        indices = (0, 1)
    else:
        indices = tuple(rng.choice(hp.ensemble, size=2, replace=False))
    v_il = agent.q_values(obs, a_il, indices).min()
    v_rl = agent.q_values(obs, a_rl, indices).min()
    if v_il > v_rl:
        return a_il, "il"
    return a_rl, "rl"  # ties go to RL so the policy can decouple from BC


# ---- TD3 update --------------------------------------------------------------

def _shaped_rewards(disc: Discriminator | None, lam: float, batch: dict) -> np.ndarray:
    if disc is None or lam == 0.0:
        return batch["r"]
    g = batch["o"][:, -3:]
    feats = discriminator_features(batch["p"], batch["p_next"], g)
    d = np.clip(disc.prob(feats), 1e-12, 1.0)
    return (batch["r"] + lam * np.log(d)).astype(np.float32)


def td3_update(agent: TD3Agent, disc: Discriminator | None, buffer: ReplayBuffer,
               hp: RLHyperparams, rng: np.random.Generator) -> dict | None:
    """One critic regression (with target smoothing and shaped rewards); every
    update_freq-th call also updates the actor and EMA-tracks the targets."""
    if buffer.size < hp.batch:
        return None
    batch = buffer.sample(hp.batch, rng)
    r_hat = _shaped_rewards(disc, hp.lam, batch)

    with T.no_grad():
        a_next = _mlp_forward_np(agent.actor_target, batch["o_next"])
        noise = np.clip(rng.normal(0.0, hp.exploration_std, size=a_next.shape),
                        -hp.noise_clip, hp.noise_clip)
        a_next = np.clip(a_next + noise, -1.0, 1.0).astype(np.float32)
        xq = np.concatenate([batch["o_next"], a_next], axis=1)
        q_next = np.min(np.stack([_mlp_forward_np(t, xq)[:, 0]
                                  for t in agent.critic_targets]), axis=0)
        y = (r_hat + hp.gamma * (1.0 - batch["done"]) * q_next).astype(np.float32)[:, None]

    xa = np.concatenate([batch["o"], batch["a"]], axis=1)
    critic_loss = None
    for critic in agent.critics:
        term = T.mse(critic(T.Tensor(xa)), T.Tensor(y))
        critic_loss = term if critic_loss is None else T.add(critic_loss, term)
    for p in agent.critic_params():
        p.grad = None
    critic_loss.backward()
    adam_step(agent.adam_critics, agent.critic_params())

    stats = {"critic_loss": float(critic_loss.data), "mean_r_hat": float(r_hat.mean()),
             "actor_updated": False}
    agent.update_count += 1
    if agent.update_count % hp.update_freq == 0:
        obs_t = T.Tensor(batch["o"])
        a_pred = agent.actor(obs_t, mode="train", rng=rng)  # actor dropout active
        q1 = agent.critics[0](T.concat([obs_t, a_pred], axis=1))
        actor_loss = T.neg(T.tmean(q1))
        for p in agent.actor.params() + agent.critic_params():
            p.grad = None
        actor_loss.backward()
        adam_step(agent.adam_actor, agent.actor.params())
        agent.ema_update(hp.ema)
        stats["actor_updated"] = True
        stats["actor_loss"] = float(actor_loss.data)
    return stats


# ---- training loop -----------------------------------------------------------

@dataclass
class TrainResult:
    agent: TD3Agent
    disc: Discriminator
    curve: list = field(default_factory=list)
    events: list = field(default_factory=list)


# ---- persistence -------------------------------------------------------------

def save_agent(agent: TD3Agent, path) -> None:
    from .neural import save_layers

    save_layers(path, [agent.actor, agent.actor_target,
                       *agent.critics, *agent.critic_targets])


def load_agent(path, obs_dim: int, act_dim: int, hp: RLHyperparams) -> TD3Agent:
    from .neural import load_layers

    agent = TD3Agent(obs_dim, act_dim, hp, np.random.default_rng(0))
    load_layers(path, [agent.actor, agent.actor_target,
                       *agent.critics, *agent.critic_targets])
    return agent


def save_bc(bc: BCPolicy, path) -> None:
    from .neural import save_layers

    save_layers(path, [bc.net])


def load_bc(path, obs_dim: int, act_dim: int, hidden: tuple = (256, 256)) -> BCPolicy:
    from .neural import load_layers

    bc = BCPolicy(obs_dim, act_dim, hidden, np.random.default_rng(0))
    load_layers(path, [bc.net])
    return bc


def save_disc(disc: Discriminator, path) -> None:
    from .neural import save_layers

    save_layers(path, [disc.net])


def load_disc(path, hidden: tuple = (128, 128), feat_dim: int = 9) -> Discriminator:
    from .neural import load_layers

    disc = Discriminator(hidden, np.random.default_rng(0), feat_dim)
    load_layers(path, [disc.net])
    return disc


def evaluate(agent: TD3Agent, bc: BCPolicy | None, env: Env, episodes: int,
             rng: np.random.Generator, hp: RLHyperparams | None = None,
             randomization_level: float = 1.0) -> float:
    """Greedy success rate over full episodes."""
    if episodes < 1:
        raise ConfigError("need episodes >= 1")
    if hp is None:
        hp = agent.hp
    successes = 0
    for _ in range(episodes):
        env.reset(randomization_level, rng)
        while not env.state.done:
            action, _ = select_action(agent, bc, env.observe(), rng, "eval", hp)
            result = env.step(action)
        successes += int(result.success)
    return successes / episodes


def train(env: Env, bc: BCPolicy | None, demos: DemoSet | None, hp: RLHyperparams,
          rng: np.random.Generator | None = None, log_fn=None) -> TrainResult:
    """Algorithm main loop: seeded buffer, IL/RL action selection, periodic
    discriminator and TD3 updates, evaluation at a fixed interval."""
    if rng is None:
        rng = np.random.default_rng(hp.seed)
    from .neural.tuning import enable_malloc_reuse

    enable_malloc_reuse()
    obs_dim, act_dim = env.observation_dim, env.action_dim
    agent = TD3Agent(obs_dim, act_dim, hp, rng)
    disc = Discriminator(hp.disc_hidden, rng)
    adam_disc = AdamState(lr=hp.disc_lr)
    buffer = ReplayBuffer(hp.buffer_capacity, obs_dim, act_dim)

    demo_feats = None
    if demos is not None and len(demos) > 0:
        buffer.seed_demos(demos)
        arrays = demos.arrays()
        demo_feats = discriminator_features(arrays["p"], arrays["p_next"],
                                            arrays["o"][:, -3:])

    eval_env = Env(env.config)
    result = TrainResult(agent=agent, disc=disc)

    def run_eval(step):
        eval_rng = np.random.default_rng([hp.seed, 7771, step])
        return evaluate(agent, bc, eval_env, hp.eval_episodes, eval_rng, hp,
                        hp.randomization_level)

    il_chosen = 0
    actions_taken = 0
    shaped_sum = 0.0
    shaped_n = 0
    last_disc_obj = None
    result.curve.append({"step": 0, "eval_success": run_eval(0), "mean_r_hat": 0.0,
                         "disc_loss": last_disc_obj, "source_fraction_il": 0.0})

    env.reset(hp.randomization_level, rng)
    for step in range(1, hp.total_steps + 1):
        obs = env.observe()
        p_before = env.state.ee_pos.copy()
        action, source = select_action(agent, bc, obs, rng, "train", hp)
        il_chosen += int(source == "il")
        actions_taken += 1
        res = env.step(action)
        # bootstrap-terminal only on true task termination; horizon timeouts
        # still end the episode but are not absorbing states
        buffer.add(p_before, obs, action, res.reward, env.state.ee_pos.copy(),
                   res.observation, float(res.success))
        if res.done:
            env.reset(hp.randomization_level, rng)

        if step % hp.update_freq == 0:
            if demo_feats is not None and hp.lam > 0:
                online = buffer.recent_online(hp.recent_window)
                if len(online) >= 2:
                    di = rng.integers(0, len(demo_feats), size=min(hp.batch, len(demo_feats)))
                    pi = online[rng.integers(0, len(online), size=min(hp.batch, len(online)))]
                    pol_feats = discriminator_features(
                        buffer.p[pi], buffer.p_next[pi], buffer.o[pi, -3:])
                    last_disc_obj = discriminator_update(disc, demo_feats[di], pol_feats,
                                                         adam_disc)
            for _ in range(hp.critic_updates):
                stats = td3_update(agent, disc if hp.lam > 0 else None, buffer, hp, rng)
                if stats is not None:
                    shaped_sum += stats["mean_r_hat"]
                    shaped_n += 1

        if step % hp.eval_interval == 0 or step == hp.total_steps:
            row = {"step": step, "eval_success": run_eval(step),
                   "mean_r_hat": shaped_sum / max(shaped_n, 1),
                   "disc_loss": last_disc_obj,
                   "source_fraction_il": il_chosen / max(actions_taken, 1)}
            result.curve.append(row)
            result.events.append({"kind": "eval", **row})
            if log_fn:
                log_fn(row)
            il_chosen = actions_taken = 0
            shaped_sum = 0.0
            shaped_n = 0
            if step == hp.total_steps:
                break
    return result
