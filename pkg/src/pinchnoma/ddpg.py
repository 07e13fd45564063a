"""Deep deterministic policy gradient: replay, updates, training loop, checkpoints."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .config import AgentConfig
from .nets import MLP, Adam, build_actor, build_critic, soft_update
from .rng import stream

CHECKPOINT_VERSION = 1


@dataclass
class Transition:
    observation: np.ndarray
    action_raw: np.ndarray
    reward: float
    next_observation: np.ndarray
    terminal: bool


@dataclass
class Batch:
    obs: np.ndarray
    act: np.ndarray
    rew: np.ndarray
    next_obs: np.ndarray
    terminal: np.ndarray

    def __len__(self):
        return len(self.rew)


class ReplayBuffer:
    """Fixed-capacity ring buffer; the oldest transition is overwritten first."""

    def __init__(self, capacity: int, obs_dim: int, act_dim: int):
        self.capacity = int(capacity)
        self.obs = np.zeros((capacity, obs_dim))
        self.act = np.zeros((capacity, act_dim))
        self.rew = np.zeros(capacity)
        self.next_obs = np.zeros((capacity, obs_dim))
        self.terminal = np.zeros(capacity, dtype=bool)
        self.cursor = 0
        self.size = 0

    def __len__(self):
        return self.size

    def add(self, tr: Transition) -> None:
        i = self.cursor
        self.obs[i] = tr.observation
        self.act[i] = tr.action_raw
        self.rew[i] = tr.reward
        self.next_obs[i] = tr.next_observation
        self.terminal[i] = tr.terminal
        self.cursor = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, batch_size: int, rng: np.random.Generator) -> Batch:
        if self.size == 0:
            raise ValueError("cannot sample from an empty buffer")
        idx = rng.integers(0, self.size, size=batch_size)
        return Batch(self.obs[idx], self.act[idx], self.rew[idx], self.next_obs[idx], self.terminal[idx])


def noise_schedule(episode: int, episodes: int, start: float, end: float) -> float:
    """Exploration std decaying linearly from ``start`` to ``end``."""
    if episodes <= 1:
        return start
    return start + (end - start) * episode / (episodes - 1)


class DDPGAgent:
    def __init__(self, obs_dim: int, act_dim: int, cfg: AgentConfig = AgentConfig(), seed: int = 0):
        self.obs_dim, self.act_dim, self.cfg = obs_dim, act_dim, cfg
        init_rng = stream(seed, "init")
        self.actor = build_actor(obs_dim, act_dim, cfg.hidden_sizes, init_rng)
        self.critic = build_critic(obs_dim, act_dim, cfg.hidden_sizes, init_rng)
        self.actor_target = self.actor.copy()
        self.critic_target = self.critic.copy()
        self.actor_opt = Adam(self.actor.params, cfg.learning_rate)
        self.critic_opt = Adam(self.critic.params, cfg.learning_rate)
        self.target_rng = stream(seed, "target-noise")

    def policy(self, obs) -> np.ndarray:
        obs = np.asarray(obs, dtype=float)
        out = self.actor(np.atleast_2d(obs))
        return out[0] if obs.ndim == 1 else out

    def act(self, obs, noise_std: float, rng: np.random.Generator) -> np.ndarray:
        a = self.policy(obs)
        if noise_std > 0:
            a = a + rng.normal(0.0, noise_std, size=a.shape)
        return np.clip(a, -1.0, 1.0)

    def td_targets(self, batch: Batch) -> np.ndarray:
        next_act = self.actor_target(batch.next_obs)
        if self.cfg.target_noise_std > 0:
            next_act = next_act + self.target_rng.normal(0.0, self.cfg.target_noise_std, size=next_act.shape)
        next_act = np.clip(next_act, -1.0, 1.0)
        q_next = self.critic_target(np.concatenate([batch.next_obs, next_act], axis=1))[:, 0]
        return batch.rew + self.cfg.discount * np.where(batch.terminal, 0.0, q_next)

    def critic_update(self, batch: Batch, targets) -> float:
        q, cache = self.critic.forward(np.concatenate([batch.obs, batch.act], axis=1))
        err = q[:, 0] - targets
        loss = float(np.mean(err * err))
        grads, _ = self.critic.backward(cache, (2.0 / len(err) * err)[:, None])
        self.critic_opt.step(self.critic.params, grads)
        return loss

    def actor_gradients(self, obs) -> tuple[float, dict]:
        """Mean Q(s, pi(s)) and its gradient w.r.t. actor parameters."""
        a, a_cache = self.actor.forward(obs)
        q, q_cache = self.critic.forward(np.concatenate([obs, a], axis=1))
        h = len(obs)
        _, d_in = self.critic.backward(q_cache, np.full((h, 1), 1.0 / h))
        grads, _ = self.actor.backward(a_cache, d_in[:, self.obs_dim:])
        return float(np.mean(q)), grads

    def actor_update(self, batch: Batch) -> float:
        objective, grads = self.actor_gradients(batch.obs)
        # gradient ascent on the critic's value; critic parameters are untouched
        self.actor_opt.step(self.actor.params, {k: -g for k, g in grads.items()})
        return objective

    def soft_update(self) -> None:
        soft_update(self.actor_target, self.actor, self.cfg.tau)
        soft_update(self.critic_target, self.critic, self.cfg.tau)

    def update(self, batch: Batch) -> tuple[float, float]:
        targets = self.td_targets(batch)
        loss = self.critic_update(batch, targets)
        objective = self.actor_update(batch)
        self.soft_update()
        return loss, objective

    # -------------------------------------------------------- checkpoints

    _NETS = ("actor", "critic", "actor_target", "critic_target")

    def save(self, path) -> None:
        meta = {
            "format_version": CHECKPOINT_VERSION,
            "obs_dim": self.obs_dim,
            "act_dim": self.act_dim,
            "agent_config": asdict(self.cfg),
            "networks": {},
            "optimizers": {"actor_opt": self.actor_opt.t, "critic_opt": self.critic_opt.t},
        }
        arrays = {}
        for name in self._NETS:
            net: MLP = getattr(self, name)
            meta["networks"][name] = {
                "sizes": net.sizes,
                "activations": net.activations,
                "norm_layers": list(net.norm_layers),
                "shapes": {k: list(v.shape) for k, v in net.params.items()},
            }
            for k, v in net.params.items():
                arrays[f"{name}/{k}"] = v
        for name in ("actor_opt", "critic_opt"):
            opt: Adam = getattr(self, name)
            for k in opt.m:
                arrays[f"{name}/m/{k}"] = opt.m[k]
                arrays[f"{name}/v/{k}"] = opt.v[k]
        arrays["meta"] = np.frombuffer(json.dumps(meta, sort_keys=True).encode(), dtype=np.uint8)
        with open(Path(path), "wb") as fh:
            np.savez(fh, **arrays)

    @classmethod
    def load(cls, path) -> "DDPGAgent":
        with np.load(Path(path), allow_pickle=False) as data:
            meta = json.loads(bytes(data["meta"]).decode())
            if meta.get("format_version") != CHECKPOINT_VERSION:
                raise ValueError(f"unsupported checkpoint version {meta.get('format_version')}")
            cfg_dict = dict(meta["agent_config"])
            agent = cls(meta["obs_dim"], meta["act_dim"], AgentConfig(**cfg_dict))
            for name in cls._NETS:
                spec = meta["networks"][name]
                net = MLP(spec["sizes"], spec["activations"], tuple(spec["norm_layers"]))
                for k, shape in spec["shapes"].items():
                    arr = np.array(data[f"{name}/{k}"], dtype=float)
                    if list(arr.shape) != shape:
                        raise ValueError(f"checkpoint array {name}/{k} has shape {arr.shape}, expected {shape}")
                    net.params[k] = arr
                setattr(agent, name, net)
            for name in ("actor_opt", "critic_opt"):
                net = agent.actor if name == "actor_opt" else agent.critic
                opt = Adam(net.params, agent.cfg.learning_rate)
                opt.t = int(meta["optimizers"][name])
                for k in opt.m:
                    opt.m[k] = np.array(data[f"{name}/m/{k}"], dtype=float)
                    opt.v[k] = np.array(data[f"{name}/v/{k}"], dtype=float)
                setattr(agent, name, opt)
        return agent


# ------------------------------------------------------------ training

LOG_FIELDS = ("episode", "return", "moving_avg_100", "noise_std", "critic_loss")


@dataclass
class TrainingResult:
    agent: DDPGAgent
    log: list[dict]

    @property
    def returns(self) -> np.ndarray:
        return np.array([row["return"] for row in self.log])


def train(env_factory, agent_config: AgentConfig, episodes: int, seed: int, agent: DDPGAgent | None = None,
          progress=None) -> TrainingResult:
    """Run the DDPG loop for ``episodes`` episodes.

    Transitions of a whole episode are collected first; then
    ``updates_per_episode`` mini-batch rounds (critic, actor, two soft
    updates) run once the buffer holds at least one batch.
    """
    env = env_factory()
    if agent is None:
        agent = DDPGAgent(env.obs_dim, env.action_dim, agent_config, seed)
    cfg = agent_config
    buffer = ReplayBuffer(cfg.buffer_size, env.obs_dim, env.action_dim)
    explore_rng = stream(seed, "explore")
    sample_rng = stream(seed, "replay")
    returns: list[float] = []
    log: list[dict] = []
    for ep in range(episodes):
        noise = noise_schedule(ep, episodes, cfg.noise_start, cfg.noise_end)
        obs = env.reset(seed, "episode", ep)
        total, steps, done = 0.0, 0, False
        while not done:
            a = agent.act(obs, noise, explore_rng)
            nxt, r, done, _ = env.step(a)
            buffer.add(Transition(obs, a, r, nxt, done))
            total += r
            steps += 1
            obs = nxt
        n_updates = cfg.updates_per_episode if cfg.updates_per_episode is not None else steps
        losses = []
        if len(buffer) >= cfg.batch_size:
            for _ in range(n_updates):
                loss, _ = agent.update(buffer.sample(cfg.batch_size, sample_rng))
                losses.append(loss)
        returns.append(total)
        window = returns[-100:]
        log.append({
            "episode": ep + 1,
            "return": total,
            "moving_avg_100": float(np.mean(window)),
            "noise_std": noise,
            "critic_loss": float(np.mean(losses)) if losses else float("nan"),
        })
        if progress is not None:
            progress(log[-1])
    return TrainingResult(agent, log)
