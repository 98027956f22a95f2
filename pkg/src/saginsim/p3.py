"""Encoded form of the BS CPU allocation subproblem shared by SGHS, SA and the oracle."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class P3Instance:
    """One dimension per active (m, n) pair; z in [0, 1] decodes to f = z * cap."""

    H: np.ndarray          # (d,) BS backlog of each active pair, bits
    bs_of: np.ndarray      # (d,) BS index of each pair
    pairs: tuple           # ((m, n), ...)
    f_max: np.ndarray      # (N,) BS capacity, Hz
    gamma: float = 1000.0
    tau_eff: float = 0.9
    kappa: float = 1e-27
    v_weight: float = 1.0
    unit: float = 1.0
    shape: tuple = (0, 0)

    @classmethod
    def from_arrays(cls, H_bs, y, f_max, gamma=1000.0, tau_eff=0.9, kappa=1e-27,
                    v_weight=1.0, unit=1.0) -> "P3Instance":
        H_bs = np.asarray(H_bs)
        pairs = tuple((int(m), int(n)) for m, n in zip(*np.nonzero(np.asarray(y))))
        H = np.array([float(H_bs[m, n]) for m, n in pairs])
        bs_of = np.array([n for _, n in pairs], dtype=int)
        f_max = np.broadcast_to(np.asarray(f_max, float), (H_bs.shape[1],)).copy()
        return cls(H, bs_of, pairs, f_max, gamma, tau_eff, kappa, v_weight, unit, H_bs.shape)

    @classmethod
    def from_context(cls, ctx, y) -> "P3Instance":
        return cls.from_arrays(ctx.H_bs, y, ctx.f_bs_max, ctx.gamma, ctx.tau_eff,
                               ctx.energy.kappa, ctx.lyap.v_weight, ctx.lyap.queue_unit)

    def __post_init__(self):
        caps = np.minimum(self.f_max[self.bs_of], self.gamma * self.H / self.tau_eff) if len(self.H) else np.zeros(0)
        groups = tuple((int(n), np.flatnonzero(self.bs_of == n)) for n in np.unique(self.bs_of))
        object.__setattr__(self, "_caps", caps)
        object.__setattr__(self, "_groups", groups)

    @property
    def dim(self) -> int:
        return len(self.pairs)

    @property
    def caps(self) -> np.ndarray:
        """Per-pair upper bound min(f_max, gamma H / (tau - Delta))."""
        return self._caps

    def decode(self, z) -> np.ndarray:
        return np.asarray(z, float) * self.caps

    def repair(self, z) -> np.ndarray:
        """Proportionally shrink the pairs of any BS whose allocations exceed its capacity."""
        z = np.minimum(np.maximum(np.asarray(z, float), 0.0), 1.0)
        f = z * self._caps
        for n, cols in self._groups:
            load = f[..., cols].sum(axis=-1, keepdims=True)
            over = load > self.f_max[n]
            scale = np.divide(self.f_max[n], load, out=np.ones_like(load), where=over)
            z[..., cols] = z[..., cols] * scale
        return z

    def value_f(self, f) -> np.ndarray:
        f = np.asarray(f, float)
        u = self.unit
        return np.sum(-self.H / u * self.tau_eff * f / self.gamma / u
                      + self.v_weight * self.kappa * self.gamma * self.H * f ** 2, axis=-1)

    def objective(self, z) -> np.ndarray:
        return self.value_f(self.decode(z))

    def to_matrix(self, f) -> np.ndarray:
        out = np.zeros(self.shape)
        for (m, n), v in zip(self.pairs, np.asarray(f, float)):
            out[m, n] = v
        return out


def random_instance(rng: np.random.Generator, max_dim: int = 3, num_uavs: int = 3, num_bs: int = 2,
                    f_max: float = 5e9, unit: float = 1e6) -> P3Instance:
    """Random P3 instance with 1..max_dim coupled pairs, mixing interior, capped and overloaded optima."""
    d = int(rng.integers(1, max_dim + 1))
    cells = rng.choice(num_uavs * num_bs, size=d, replace=False)
    H_bs = np.zeros((num_uavs, num_bs))
    y = np.zeros((num_uavs, num_bs), dtype=np.int64)
    for c in cells:
        m, n = divmod(int(c), num_bs)
        y[m, n] = 1
        H_bs[m, n] = float(np.round(10 ** rng.uniform(5, 8)))
    v = float(10 ** rng.uniform(-1.5, 0.5))
    return P3Instance.from_arrays(H_bs, y, f_max, v_weight=v, unit=unit)
