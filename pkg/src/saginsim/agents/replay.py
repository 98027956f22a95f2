"""Fixed-capacity ring buffer of transitions."""

from __future__ import annotations

import numpy as np


class ReplayBuffer:
    def __init__(self, capacity: int, state_dim: int, action_dim: int, n_actions: int | None = None):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self.s = np.zeros((capacity, state_dim))
        self.a = np.zeros((capacity, action_dim))
        self.r = np.zeros(capacity)
        self.s2 = np.zeros((capacity, state_dim))
        self.done = np.zeros(capacity)
        # feasibility mask of the next state's discrete actions
        self.mask2 = np.ones((capacity, n_actions), dtype=bool) if n_actions else None
        self.size = 0
        self.ptr = 0

    def __len__(self) -> int:
        return self.size

    def add(self, s, a, r, s2, done, mask2=None) -> None:
        i = self.ptr
        self.s[i], self.a[i], self.r[i], self.s2[i], self.done[i] = s, a, r, s2, float(done)
        if self.mask2 is not None:
            self.mask2[i] = True if mask2 is None else mask2
        self.ptr = (self.ptr + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, batch: int, rng: np.random.Generator) -> dict:
        if self.size == 0:
            raise ValueError("cannot sample from an empty buffer")
        idx = rng.integers(0, self.size, size=batch)
        out = dict(s=self.s[idx], a=self.a[idx], r=self.r[idx], s2=self.s2[idx], done=self.done[idx])
        if self.mask2 is not None:
            out["mask2"] = self.mask2[idx]
        return out
