"""Comparison policies and the exact oracles used to check the learned solvers."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace

import numpy as np

from .lyapunov import ObjectiveContext, p1_per_uav, p2_objective, p2_per_uav, realize_split
from .p3 import P3Instance
from .queueing import SlotDecision, hosting_decision


@dataclass(frozen=True)
class SaConfig:
    initial_temp: float = 1.0
    cooling_rate: float = 0.95
    iters: int = 1000
    step_sigma: float = 0.1

    def __post_init__(self):
        if not 0 < self.cooling_rate < 1:
            raise ValueError("cooling_rate must lie in (0, 1)")
        if self.iters < 1:
            raise ValueError("iters must be >= 1")

    @classmethod
    def from_config(cls, cfg) -> "SaConfig":
        s = cfg.sa
        return cls(s.initial_temp, s.cooling_rate, s.iters, s.step_sigma)


# ---- hosting rules -------------------------------------------------------

def perception_hosting(reports_by_uav, D, K: int, delta: float, v_bar: float) -> np.ndarray:
    x = np.zeros((K, len(reports_by_uav)), dtype=np.int64)
    for m, reps in enumerate(reports_by_uav):
        for r in reps:
            x[r.device_id, m] = hosting_decision(r, float(D[r.device_id]), delta, v_bar)
    return x


def perception_free_hosting(reports_by_uav, D, K: int, delta: float, worst_rate: float) -> np.ndarray:
    """Latency check at the coverage-edge rate for every device, no speed check."""
    x = np.zeros((K, len(reports_by_uav)), dtype=np.int64)
    for m, reps in enumerate(reports_by_uav):
        for r in reps:
            x[r.device_id, m] = hosting_decision(r, float(D[r.device_id]), delta, math.inf,
                                                 check_speed=False, rate=worst_rate)
    return x


def random_hosting(device_cover, K: int, rng: np.random.Generator) -> np.ndarray:
    x = np.zeros((K, len(device_cover)), dtype=np.int64)
    for m, ids in enumerate(device_cover):
        for k in ids:
            x[k, m] = int(rng.random() < 0.5)
    return x


# ---- per-slot policies ---------------------------------------------------

def f_u_caps(ctx: ObjectiveContext) -> np.ndarray:
    return np.minimum(ctx.f_u_max, ctx.gamma * ctx.H_uav / ctx.tau_eff)


def random_association(ctx: ObjectiveContext, rng: np.random.Generator) -> np.ndarray:
    y = np.zeros((ctx.M, ctx.N), dtype=np.int64)
    for m, ids in enumerate(ctx.bs_cover):
        choice = rng.integers(0, len(ids) + 1)
        if choice > 0:
            y[m, list(ids)[choice - 1]] = 1
    return y


def backlog_instance(ctx: ObjectiveContext) -> P3Instance:
    """P3 over every (m, n) pair holding BS backlog."""
    return P3Instance.from_arrays(ctx.H_bs, ctx.H_bs > 0, ctx.f_bs_max, ctx.gamma, ctx.tau_eff,
                                  ctx.energy.kappa, ctx.lyap.v_weight, ctx.lyap.queue_unit)


def random_policy(ctx: ObjectiveContext, rng: np.random.Generator) -> SlotDecision:
    """Uniform split on the simplex, uniform frequency, uniform feasible association and BS CPU."""
    frac = rng.dirichlet(np.ones(3), size=ctx.M)
    f_u = rng.random(ctx.M) * f_u_caps(ctx)
    y = random_association(ctx, rng)
    inst = backlog_instance(ctx)
    z = inst.repair(rng.random(inst.dim))
    f_bs = inst.to_matrix(inst.decode(z))
    return SlotDecision(np.zeros((0, ctx.M), dtype=np.int64), y, frac * ctx.H_uav[:, None],
                        f_u, f_bs)


def local_frequency(ctx: ObjectiveContext) -> np.ndarray:
    """Minimiser of P1's f_u terms: tau_eff / (2 V kappa gamma^2 u^2), clipped to the caps."""
    V, u = ctx.lyap.v_weight, ctx.lyap.queue_unit
    denom = 2.0 * V * ctx.energy.kappa * ctx.gamma ** 2 * u ** 2
    f_star = ctx.tau_eff / denom if denom > 0 else math.inf
    return np.minimum(f_star, f_u_caps(ctx))


def complete_offloading_split(ctx: ObjectiveContext, y) -> tuple[np.ndarray, np.ndarray]:
    """Per UAV, the best one-hot split of the whole backlog by the realised P1 value."""
    ctx = replace(ctx, y_prev=np.asarray(y))
    H = ctx.H_uav.astype(float)
    f_loc = local_frequency(ctx)
    best_val = np.full(ctx.M, np.inf)
    split = np.zeros((ctx.M, 3))
    f_u = np.zeros(ctx.M)
    for j in range(3):
        plan = np.zeros((ctx.M, 3))
        plan[:, j] = H
        f = f_loc if j == 0 else np.zeros(ctx.M)
        vals = p1_per_uav(ctx, realize_split(ctx, plan, f, y), f)
        better = vals < best_val
        best_val = np.where(better, vals, best_val)
        split[better] = plan[better]
        f_u[better] = f[better]
    return split, f_u


def decode_p1_action(ctx: ObjectiveContext, action) -> tuple[np.ndarray, np.ndarray]:
    """Squashed per-UAV action (loc, bs, sat fractions, frequency fraction) -> (split bits, f_u).

    The CPU never runs faster than the local share needs.
    """
    a = np.atleast_2d(np.asarray(action, float))
    H = ctx.H_uav.astype(float)
    f_u = np.minimum(a[:, 3] * f_u_caps(ctx), ctx.gamma * a[:, 0] * H / ctx.tau_eff)
    return a[:, :3] * H[:, None], f_u


def p1_action_value(ctx: ObjectiveContext, y, action) -> np.ndarray:
    """Per-UAV realised P1 value of a squashed action under association y."""
    ctx = replace(ctx, y_prev=np.asarray(y))
    plan, f = decode_p1_action(ctx, action)
    return p1_per_uav(ctx, realize_split(ctx, plan, f, y), f)


def p1_grid_reference(ctx: ObjectiveContext, y, step: float = 0.05, f_points: int = 21) -> np.ndarray:
    """Per-UAV minimum of the realised P1 value over a simplex grid times a frequency grid."""
    n = int(round(1.0 / step))
    fracs = np.array([(i / n, j / n, (n - i - j) / n) for i in range(n + 1) for j in range(n + 1 - i)])
    best = np.full(ctx.M, np.inf)
    for fr in fracs:
        for g in np.linspace(0.0, 1.0, f_points):
            a = np.tile(np.append(fr, g), (ctx.M, 1))
            best = np.minimum(best, p1_action_value(ctx, y, a))
    return best


def simulated_annealing_allocate(inst: P3Instance, cfg: SaConfig, rng: np.random.Generator,
                                 warm_start=None):
    """Metropolis search with geometric cooling on the encoded, repaired P3 space.

    Returns (f per pair, best fitness, best-so-far trace).
    """
    if inst.dim == 0:
        return np.zeros(0), 0.0, np.zeros(0)
    if warm_start is not None:
        z = inst.repair(np.asarray(warm_start, float))
    else:
        z = inst.repair(rng.random(inst.dim))
    cur = float(inst.objective(z))
    best_z, best = z.copy(), cur
    T = cfg.initial_temp
    trace = np.empty(cfg.iters)
    for i in range(cfg.iters):
        cand = inst.repair(z + cfg.step_sigma * rng.standard_normal(inst.dim))
        val = float(inst.objective(cand))
        delta = val - cur
        u = rng.random()
        if delta <= 0 or (T > 0 and u < math.exp(-delta / T)):
            z, cur = cand, val
            if cur < best:
                best_z, best = z.copy(), cur
        T *= cfg.cooling_rate
        trace[i] = best
    return inst.decode(best_z), best, trace


def sa_minimize(objective, dim: int, cfg: SaConfig, rng: np.random.Generator, repair=None):
    """Generic box-constrained annealing on [0, 1]^dim (used for benchmarks and tests)."""
    fix = repair if repair is not None else (lambda v: np.clip(v, 0.0, 1.0))
    z = fix(rng.random(dim))
    cur = float(objective(z[None, :])[0])
    best_z, best = z.copy(), cur
    T = cfg.initial_temp
    trace = np.empty(cfg.iters)
    for i in range(cfg.iters):
        cand = fix(z + cfg.step_sigma * rng.standard_normal(dim))
        val = float(objective(cand[None, :])[0])
        delta = val - cur
        u = rng.random()
        if delta <= 0 or (T > 0 and u < math.exp(-delta / T)):
            z, cur = cand, val
            if cur < best:
                best_z, best = z.copy(), cur
        T *= cfg.cooling_rate
        trace[i] = best
    return best_z, best, trace


# ---- oracles -------------------------------------------------------------

def exhaustive_p2_oracle(ctx: ObjectiveContext) -> np.ndarray:
    """Exact argmin of P2 by per-UAV enumeration of {none} plus covered BSs."""
    if np.prod([len(c) + 1 for c in ctx.bs_cover], dtype=float) > 1e6:
        raise ValueError("association space too large for enumeration")
    y = np.zeros((ctx.M, ctx.N), dtype=np.int64)
    for m, ids in enumerate(ctx.bs_cover):
        best_val, best_n = None, None
        for n in [None, *ids]:
            trial = y.copy()
            trial[m] = 0
            if n is not None:
                trial[m, n] = 1
            v = p2_per_uav(ctx, trial)[m]
            if best_val is None or v < best_val:
                best_val, best_n = v, n
        if best_n is not None:
            y[m, best_n] = 1
    return y


def joint_p2_bruteforce(ctx: ObjectiveContext) -> tuple[np.ndarray, float]:
    """Enumerate every joint association; test-only cross-check of the separable oracle."""
    options = [[None, *ids] for ids in ctx.bs_cover]
    best_y, best = None, math.inf
    for combo in itertools.product(*options):
        y = np.zeros((ctx.M, ctx.N), dtype=np.int64)
        for m, n in enumerate(combo):
            if n is not None:
                y[m, n] = 1
        v = p2_objective(ctx, y)
        if v < best:
            best_y, best = y, v
    return best_y, best


def p3_analytic_oracle(inst: P3Instance) -> np.ndarray:
    """Exact P3 optimum per pair: clipped stationary point, KKT bisection when a BS is overloaded."""
    if inst.dim == 0:
        return np.zeros(0)
    u = inst.unit
    a = inst.v_weight * inst.kappa * inst.gamma * inst.H          # quadratic coefficient
    b = inst.H * inst.tau_eff / inst.gamma / u ** 2                # linear gain
    caps = inst.caps
    f = np.zeros(inst.dim)

    def at(lam, idx):
        with np.errstate(divide="ignore", invalid="ignore"):
            raw = np.where(a[idx] > 0, (b[idx] - lam) / (2.0 * a[idx]),
                           np.where(b[idx] > lam, np.inf, 0.0))
        return np.clip(raw, 0.0, caps[idx])

    for n in np.unique(inst.bs_of):
        idx = np.flatnonzero(inst.bs_of == n)
        fn = at(0.0, idx)
        if fn.sum() <= inst.f_max[n]:
            f[idx] = fn
            continue
        lo, hi = 0.0, float(np.max(b[idx]))
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if at(mid, idx).sum() > inst.f_max[n]:
                lo = mid
            else:
                hi = mid
        fn = at(hi, idx)
        # spend any residual capacity (linear pairs at the threshold)
        slack = inst.f_max[n] - fn.sum()
        for i in np.argsort(-b[idx]):
            if slack <= 0:
                break
            if a[idx][i] == 0 and b[idx][i] > 0:
                add = min(slack, caps[idx][i] - fn[i])
                fn[i] += add
                slack -= add
        f[idx] = fn
    return f


def p3_grid_search(inst: P3Instance, points: int | None = None, refine: int = 3) -> np.ndarray:
    """Dense grid over the decoded box (feasible points only), refined around the best point."""
    d = inst.dim
    if d == 0:
        return np.zeros(0)
    if d > 3:
        raise ValueError("grid search limited to 3 dimensions")
    points = points or {1: 10000, 2: 1000, 3: 100}[d]
    lo, hi = np.zeros(d), inst.caps.copy()
    best_f, best = None, math.inf
    for _ in range(refine + 1):
        axes = [np.linspace(lo[i], hi[i], points) for i in range(d)]
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
        ok = np.ones(len(grid), dtype=bool)
        for n in np.unique(inst.bs_of):
            ok &= grid[:, inst.bs_of == n].sum(axis=1) <= inst.f_max[n] * (1 + 1e-12)
        grid = grid[ok]
        vals = inst.value_f(grid)
        i = int(np.argmin(vals))
        if vals[i] < best:
            best, best_f = float(vals[i]), grid[i].copy()
        width = (hi - lo) / (points - 1) * 4
        lo = np.maximum(best_f - width, 0.0)
        hi = np.minimum(best_f + width, inst.caps)
    return best_f
