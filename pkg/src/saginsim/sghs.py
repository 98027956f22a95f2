"""Self-adaptive global-best harmony search on the unit box with a repair map."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class SghsConfig:
    hms: int = 30
    ni: int = 10000
    bw_min: float = 5e-4
    bw_max: float = 0.5
    mu_hmcr: float = 0.95
    sigma_hmcr: float = 0.01
    mu_par: float = 0.3
    sigma_par: float = 0.05
    batch: int = 20
    symmetric: bool = False

    def __post_init__(self):
        if self.hms < 1 or self.ni < 1 or self.batch < 1:
            raise ValueError("hms, ni and batch must be >= 1")
        if not 0 < self.bw_min <= self.bw_max:
            raise ValueError("need 0 < bw_min <= bw_max")

    @classmethod
    def from_config(cls, cfg, online: bool = False) -> "SghsConfig":
        s = cfg.sghs
        return cls(s.hms, s.online_ni if online else s.ni, s.bw_min, s.bw_max, s.mu_hmcr,
                   s.sigma_hmcr, s.mu_par, s.sigma_par, s.batch, s.symmetric)


@dataclass(frozen=True)
class Harmony:
    vector: np.ndarray
    fitness: float


def bw_schedule(it: int, cfg: SghsConfig) -> float:
    if it < cfg.ni / 2:
        return cfg.bw_max - (cfg.bw_max - cfg.bw_min) / cfg.ni * 2 * it
    return cfg.bw_min


def _improvise(hm, hmcr, par, bw, u, symmetric):
    hms, d = hm.shape
    pick = (u[0] * hms).astype(np.intp)
    from_mem = hm[pick, np.arange(d)]
    step = 2.0 * u[2] - 1.0 if symmetric else u[2]
    from_mem += (u[1] <= par) * step * bw
    cand = np.where(u[4] <= hmcr, from_mem, u[3])
    return np.minimum(np.maximum(cand, 0.0), 1.0)


def improvise(hm: np.ndarray, hmcr: float, par: float, bw: float, rng: np.random.Generator,
              n: int = 1, symmetric: bool = False, repair: Callable | None = None) -> np.ndarray:
    """Draw ``n`` new harmonies in [0, 1]^d from memory ``hm`` (hms x d)."""
    hm = np.atleast_2d(hm)
    hms, d = hm.shape
    if hms == 0:
        raise ValueError("harmony memory is empty")
    cand = _improvise(hm, hmcr, par, bw, rng.random((5, n, d)), symmetric)
    return repair(cand) if repair is not None else cand


def sghs_minimize(objective: Callable, dim: int, cfg: SghsConfig, rng: np.random.Generator,
                  repair: Callable | None = None, warm_start=None,
                  trace_path: str | Path | None = None):
    """Minimise a batched objective over [0, 1]^dim.

    ``objective`` maps an (n, dim) array to n fitness values.  Returns the
    best harmony and the per-iteration best-fitness trace.
    """
    fix = repair if repair is not None else (lambda z: z)
    hm = fix(rng.random((cfg.hms, dim)))
    if warm_start is not None:
        hm[0] = fix(np.clip(np.asarray(warm_start, float).reshape(1, dim), 0.0, 1.0))[0]
    fit = [float(v) for v in objective(hm)]
    trace = np.empty(cfg.ni)
    best_i = fit.index(min(fit))
    best_vec, best_fit = hm[best_i].copy(), fit[best_i]
    worst = fit.index(max(fit))
    for it in range(cfg.ni):
        bw = bw_schedule(it, cfg)
        hmcr = min(max(rng.normal(cfg.mu_hmcr, cfg.sigma_hmcr), 0.0), 1.0)
        par = min(max(rng.normal(cfg.mu_par, cfg.sigma_par), 0.0), 1.0)
        cand = fix(_improvise(hm, hmcr, par, bw, rng.random((5, cfg.batch, dim)), cfg.symmetric))
        cfit = objective(cand).tolist()
        # replacement in candidate order keeps the run deterministic
        for j, v in enumerate(cfit):
            if v <= fit[worst]:
                hm[worst] = cand[j]
                fit[worst] = v
                if v < best_fit:
                    best_vec, best_fit = cand[j].copy(), v
                worst = fit.index(max(fit))
        trace[it] = best_fit
    if trace_path is not None:
        write_trace(trace, trace_path)
    return Harmony(best_vec, float(best_fit)), trace


def write_trace(trace, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iter", "best_fitness"])
        for i, v in enumerate(trace):
            w.writerow([i, repr(float(v))])


def solve_p3(inst, cfg: SghsConfig, rng: np.random.Generator, warm_start=None):
    """Run SGHS on an encoded P3 instance; returns (f per pair, best fitness, trace)."""
    if inst.dim == 0:
        return np.zeros(0), 0.0, np.zeros(0)
    best, trace = sghs_minimize(inst.objective, inst.dim, cfg, rng, inst.repair, warm_start)
    return inst.decode(best.vector), best.fitness, trace
