"""DDPG actor-critic for the continuous offload split and UAV CPU frequency."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mlp import Adam, Mlp
from .replay import ReplayBuffer

# per-UAV action: three split logits (loc, bs, sat) and one frequency logit
ACTION_DIM = 4


@dataclass(frozen=True)
class DdpgConfig:
    hidden: int = 64
    lr: float = 1e-3
    discount: float = 0.99
    soft_tau: float = 0.005
    buffer_size: int = 10000
    batch_size: int = 64
    explore_sigma: float = 0.3
    reward_norm: bool = False
    # L2 pull on the actor's pre-squash outputs so softmax/sigmoid stay responsive
    logit_l2: float = 0.0

    @classmethod
    def from_config(cls, cfg, reward_norm: bool = True) -> "DdpgConfig":
        a = cfg.agents
        return cls(a.hidden, a.lr, a.discount, a.soft_tau, a.buffer_size, a.batch_size,
                   a.explore_sigma, reward_norm, a.logit_l2)


class RunningStats:
    """Welford mean and variance of every reward seen so far."""

    def __init__(self):
        self.n, self.mean, self.m2 = 0, 0.0, 0.0

    def push(self, x: float) -> None:
        self.n += 1
        d = x - self.mean
        self.mean += d / self.n
        self.m2 += d * (x - self.mean)

    @property
    def std(self) -> float:
        return float(np.sqrt(self.m2 / self.n)) if self.n > 1 else 1.0


def squash(raw):
    """Raw actor output -> (split fractions summing to 1, frequency fraction in (0, 1))."""
    raw = np.atleast_2d(raw)
    z = raw[:, :3] - raw[:, :3].max(axis=1, keepdims=True)
    e = np.exp(z)
    p = e / e.sum(axis=1, keepdims=True)
    s = 1.0 / (1.0 + np.exp(-raw[:, 3:4]))
    return np.hstack([p, s])


def squash_backward(a, g):
    """Chain dL/da through the squash back to dL/draw."""
    p, s = a[:, :3], a[:, 3:4]
    gp = p * (g[:, :3] - np.sum(g[:, :3] * p, axis=1, keepdims=True))
    return np.hstack([gp, g[:, 3:4] * s * (1.0 - s)])


class DdpgAgent:
    def __init__(self, state_dim: int, cfg: DdpgConfig, rng: np.random.Generator):
        self.cfg = cfg
        self.state_dim = state_dim
        self.rng = rng
        h = cfg.hidden
        # zero output layer: a fresh actor proposes equal thirds and half frequency
        self.actor = Mlp((state_dim, h, h, ACTION_DIM), rng, out_scale=0.0)
        self.critic = Mlp((state_dim + ACTION_DIM, h, h, 1), rng, out_scale=3e-3)
        self.target_actor = self.actor.copy()
        self.target_critic = self.critic.copy()
        self.actor_opt = Adam(self.actor.params, cfg.lr)
        self.critic_opt = Adam(self.critic.params, cfg.lr)
        self.buffer = ReplayBuffer(cfg.buffer_size, state_dim, ACTION_DIM)
        self.stats = RunningStats()
        self.updates = 0
        self.curve: list = []

    def act(self, s, explore: bool = False, rng: np.random.Generator | None = None):
        raw = np.atleast_2d(self.actor.forward(np.atleast_2d(s)))
        if explore:
            rng = rng if rng is not None else self.rng
            raw = raw + self.cfg.explore_sigma * rng.standard_normal(raw.shape)
        return squash(raw)

    def remember(self, s, a, r, s2, done=True) -> None:
        self.buffer.add(s, a, r, s2, done)
        self.stats.push(float(r))

    def _scale(self, r):
        if not self.cfg.reward_norm:
            return r
        return (r - self.stats.mean) / max(self.stats.std, 1e-8)

    def update(self, batch: dict | None = None) -> tuple[float, float]:
        cfg = self.cfg
        if batch is None:
            batch = self.buffer.sample(cfg.batch_size, self.rng)
        s, a, s2 = batch["s"], batch["a"], batch["s2"]
        r = self._scale(batch["r"])
        a2 = squash(self.target_actor.forward(s2))
        q2 = self.target_critic.forward(np.hstack([s2, a2]))[:, 0]
        target = r + cfg.discount * (1.0 - batch["done"]) * q2
        q, acts = self.critic.forward(np.hstack([s, a]), cache=True)
        err = q[:, 0] - target
        critic_loss = float(np.mean(err ** 2))
        grads, _ = self.critic.backward(acts, (2.0 * err / len(err))[:, None])
        self.critic_opt.step(grads)

        raw, a_acts = self.actor.forward(s, cache=True)
        a_pi = squash(raw)
        qp, c_acts = self.critic.forward(np.hstack([s, a_pi]), cache=True)
        actor_loss = float(-np.mean(qp) + cfg.logit_l2 * np.mean(np.sum(raw ** 2, axis=1)))
        _, gx = self.critic.backward(c_acts, np.full_like(qp, -1.0 / len(qp)))
        g_raw = squash_backward(a_pi, gx[:, self.state_dim:]) + 2.0 * cfg.logit_l2 * raw / len(raw)
        a_grads, _ = self.actor.backward(a_acts, g_raw)
        self.actor_opt.step(a_grads)

        self.target_actor.soft_update_from(self.actor, cfg.soft_tau)
        self.target_critic.soft_update_from(self.critic, cfg.soft_tau)
        self.updates += 1
        self.curve.append((self.updates, critic_loss, actor_loss, float(np.mean(batch["r"]))))
        return critic_loss, actor_loss


def ddpg_act(agent: DdpgAgent, s, explore: bool, rng):
    return agent.act(s, explore, rng)


def ddpg_update(agent: DdpgAgent, batch: dict | None = None):
    return agent.update(batch)
