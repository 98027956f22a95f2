"""DQN with masked epsilon-greedy action selection for UAV-BS association.

Action 0 means no BS; action n + 1 associates with BS n.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ddpg import RunningStats
from .mlp import Adam, Mlp
from .replay import ReplayBuffer


@dataclass(frozen=True)
class DqnConfig:
    hidden: int = 64
    lr: float = 1e-3
    discount: float = 0.99
    buffer_size: int = 10000
    batch_size: int = 64
    eps_start: float = 1.0
    eps_end: float = 0.05
    eps_steps: int = 5000
    target_sync: int = 100
    reward_norm: bool = False
    # symlog scale; rewards spanning many decades keep their sign and order
    reward_floor: float = 0.0

    @classmethod
    def from_config(cls, cfg, reward_norm: bool = True) -> "DqnConfig":
        a = cfg.agents
        return cls(a.hidden, a.lr, a.discount, a.buffer_size, a.batch_size, a.eps_start,
                   a.eps_end, a.eps_steps, a.target_sync, reward_norm, a.dqn_reward_floor)


def action_mask(bs_cover_m, num_bs: int) -> np.ndarray:
    mask = np.zeros(num_bs + 1, dtype=bool)
    mask[0] = True
    mask[[n + 1 for n in bs_cover_m]] = True
    return mask


def actions_to_y(actions, num_bs: int) -> np.ndarray:
    actions = np.asarray(actions, dtype=int)
    y = np.zeros((len(actions), num_bs), dtype=np.int64)
    for m, a in enumerate(actions):
        if a > 0:
            y[m, a - 1] = 1
    return y


class DqnAgent:
    def __init__(self, state_dim: int, num_bs: int, cfg: DqnConfig, rng: np.random.Generator):
        self.cfg = cfg
        self.n_actions = num_bs + 1
        self.rng = rng
        self.q = Mlp((state_dim, cfg.hidden, cfg.hidden, self.n_actions), rng, out_scale=3e-3)
        self.target = self.q.copy()
        self.opt = Adam(self.q.params, cfg.lr)
        self.buffer = ReplayBuffer(cfg.buffer_size, state_dim, 1, self.n_actions)
        self.stats = RunningStats()
        self.steps = 0
        self.updates = 0
        self.curve: list = []

    def epsilon(self) -> float:
        c = self.cfg
        frac = min(self.steps / max(c.eps_steps, 1), 1.0)
        return c.eps_start + frac * (c.eps_end - c.eps_start)

    def act(self, states, masks, epsilon: float | None = None, rng: np.random.Generator | None = None):
        """One action per row of ``states``, restricted to each row's feasible mask."""
        rng = rng if rng is not None else self.rng
        eps = self.epsilon() if epsilon is None else epsilon
        states = np.atleast_2d(states)
        masks = np.atleast_2d(masks)
        qv = self.q.forward(states)
        out = np.empty(len(states), dtype=int)
        for i in range(len(states)):
            feas = np.flatnonzero(masks[i])
            explore = rng.random() < eps
            pick = rng.integers(0, len(feas))
            if explore:
                out[i] = feas[pick]
            else:
                out[i] = feas[int(np.argmax(qv[i, feas]))]
        return out

    def remember(self, s, a, r, s2, done=True, mask2=None) -> None:
        self.buffer.add(s, [a], r, s2, done, mask2)
        self.stats.push(float(r))
        self.steps += 1

    def update(self, batch: dict | None = None) -> float:
        cfg = self.cfg
        if batch is None:
            batch = self.buffer.sample(cfg.batch_size, self.rng)
        r = batch["r"]
        if cfg.reward_floor > 0:
            r = np.sign(r) * np.log1p(np.abs(r) / cfg.reward_floor)
        elif cfg.reward_norm:
            r = (r - self.stats.mean) / max(self.stats.std, 1e-8)
        q2 = self.target.forward(batch["s2"])
        mask2 = batch.get("mask2")
        if mask2 is not None:
            q2 = np.where(mask2, q2, -np.inf)
        target = r + cfg.discount * (1.0 - batch["done"]) * np.where(batch["done"] > 0, 0.0, q2.max(axis=1))
        q, acts = self.q.forward(batch["s"], cache=True)
        a = batch["a"][:, 0].astype(int)
        idx = np.arange(len(a))
        err = q[idx, a] - target
        g = np.zeros_like(q)
        g[idx, a] = 2.0 * err / len(err)
        grads, _ = self.q.backward(acts, g)
        self.opt.step(grads)
        self.updates += 1
        if self.updates % cfg.target_sync == 0:
            self.target = self.q.copy()
        loss = float(np.mean(err ** 2))
        self.curve.append((self.updates, loss, float(np.mean(batch["r"]))))
        return loss


def dqn_act(agent: DqnAgent, s, masks, epsilon: float, rng):
    return agent.act(s, masks, epsilon, rng)


def dqn_update(agent: DqnAgent, batch: dict | None = None) -> float:
    return agent.update(batch)
