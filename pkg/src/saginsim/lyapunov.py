"""Lyapunov value, drift, the per-slot upper bound, and the P1/P2/P3 objectives.

Queue lengths enter the Lyapunov function in units of ``queue_unit`` bits.
With unit 1 every quantity is in raw bits; the simulator uses Mbit so that
the drift and the V-weighted cost live on comparable scales.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cost import EnergyParams, InfeasibleTransmission
from .queueing import FeasibilityError, NetworkQueues, OffloadSplit, bits_floor, resolve_offload


@dataclass(frozen=True)
class LyapunovConfig:
    v_weight: float = 1.0
    pi_constant: float = 0.0
    queue_unit: float = 1.0

    def __post_init__(self):
        if self.v_weight < 0:
            raise ValueError("v_weight must be >= 0")
        if self.pi_constant < 0:
            raise ValueError("pi_constant must be >= 0")
        if self.queue_unit <= 0:
            raise ValueError("queue_unit must be > 0")


@dataclass
class ObjectiveContext:
    """Everything the subproblem objectives read in one slot.

    Arrays are indexed by UAV m and BS n.  ``collect`` and ``direct`` are the
    already-evaluated hosting-dependent cost constants of P1 per UAV.
    """

    H_uav: np.ndarray           # (M,) bits
    H_bs: np.ndarray            # (M, N) bits
    hosted: np.ndarray          # (M,) D_m^u bits
    rate_ub: np.ndarray         # (M, N) bps
    rate_us: np.ndarray         # (M,) bps
    bs_cover: tuple             # per-UAV covered BS indices
    gamma: float = 1000.0
    tau_eff: float = 0.9
    f_u_max: float = 3e8
    f_bs_max: np.ndarray = field(default_factory=lambda: np.array([5e9]))
    sat_share: float = 2e9      # satellite CPU per UAV, f_s = f_sat / M
    energy: EnergyParams = field(default_factory=EnergyParams)
    lyap: LyapunovConfig = field(default_factory=LyapunovConfig)
    collect: np.ndarray | None = None
    direct: np.ndarray | None = None
    y_prev: np.ndarray | None = None     # association used for R^{ub} inside P1
    f_bs_prev: np.ndarray | None = None  # BS allocation frozen inside P1 and P2
    q_bs_plan: np.ndarray | None = None  # (M,) bits offered to the BS link by P1
    reports: tuple = ()

    @property
    def M(self) -> int:
        return len(self.H_uav)

    @property
    def N(self) -> int:
        return self.H_bs.shape[1]

    def _zeros_m(self):
        return np.zeros(self.M)

    def cover_mask(self) -> np.ndarray:
        mask = np.zeros((self.M, self.N), dtype=bool)
        for m, ids in enumerate(self.bs_cover):
            mask[m, list(ids)] = True
        return mask

    def assoc_rate(self, y=None) -> np.ndarray:
        """R^{ub} of each UAV towards its associated BS, 0 when unassociated."""
        y = self.y_prev if y is None else y
        if y is None:
            return np.zeros(self.M)
        return np.sum(np.asarray(y) * self.rate_ub, axis=1)

    def bs_service(self, f_bs=None) -> np.ndarray:
        """J^{u,b} per (m, n) under an allocation, whole bits."""
        f = self.f_bs_prev if f_bs is None else f_bs
        if f is None:
            return np.zeros_like(self.H_bs)
        cap = np.floor(self.tau_eff * np.asarray(f, float) / self.gamma * (1 + 1e-12))
        return np.minimum(self.H_bs.astype(float), cap)


def lyapunov_value(q: NetworkQueues, unit: float = 1.0) -> float:
    num = sum(int(h) ** 2 for h in q.uav) + sum(int(h) ** 2 for h in q.bs.ravel())
    return num / 2.0 / unit ** 2


def sample_drift(q_t: NetworkQueues, q_t1: NetworkQueues, unit: float = 1.0) -> float:
    num = (sum(int(h) ** 2 for h in q_t1.uav) + sum(int(h) ** 2 for h in q_t1.bs.ravel())
           - sum(int(h) ** 2 for h in q_t.uav) - sum(int(h) ** 2 for h in q_t.bs.ravel()))
    return num / 2.0 / unit ** 2


def drift_plus_penalty(drift: float, slot_cost: float, V: float) -> float:
    return drift + V * slot_cost


def pi_numerator(d_max, s_max, qb_max, jb_max) -> int:
    """2 u^2 Pi as an exact integer from whole-bit per-slot maxima."""
    tot = 0
    for arr in (d_max, s_max, qb_max, jb_max):
        tot += sum(int(v) ** 2 for v in np.ravel(arr))
    return tot


def pi_from_caps(d_max, s_max, qb_max, jb_max, unit: float = 1.0) -> float:
    """Pi = 1/2 sum_m [D_max^2 + S_max^2] + 1/2 sum_{m,n} [Q_max^2 + J_max^2]."""
    return pi_numerator(d_max, s_max, qb_max, jb_max) / 2.0 / unit ** 2


def _bound_numerator(H_uav, H_bs, hosted, realized, y, J_bs) -> int:
    """2 u^2 times the queue-weighted bracket of the bound, in exact integers."""
    tot = 0
    for m in range(len(H_uav)):
        ql, qb, qs = (int(v) for v in realized[m])
        tot += int(H_uav[m]) * (int(hosted[m]) - ql - qb - qs)
        for n in range(H_bs.shape[1]):
            tot += int(H_bs[m, n]) * (int(y[m, n]) * qb - int(J_bs[m, n]))
    return 2 * tot


def theorem1_rhs(H_uav, H_bs, hosted, realized, y, J_bs, slot_cost: float, lyap: LyapunovConfig) -> float:
    """Pi + queue-weighted bracket + V G(t), with realised per-slot quantities.

    ``realized`` is an (M, 3) array of whole bits (loc, bs, sat).
    """
    bracket = _bound_numerator(H_uav, H_bs, hosted, realized, y, J_bs) / 2.0 / lyap.queue_unit ** 2
    return lyap.pi_constant + bracket + lyap.v_weight * slot_cost


def bound_holds(q_t: NetworkQueues, q_t1: NetworkQueues, hosted, realized, y, J_bs, pi_num: int) -> bool:
    """Exact check of drift + V G <= rhs; V G appears on both sides and cancels."""
    drift_num = (sum(int(h) ** 2 for h in q_t1.uav) + sum(int(h) ** 2 for h in q_t1.bs.ravel())
                 - sum(int(h) ** 2 for h in q_t.uav) - sum(int(h) ** 2 for h in q_t.bs.ravel()))
    return drift_num <= pi_num + _bound_numerator(q_t.uav, q_t.bs, hosted, realized, y, J_bs)


def _check_p1(ctx: ObjectiveContext, split: np.ndarray, f_u: np.ndarray, tol: float = 1e-9):
    if split.shape != (ctx.M, 3) or f_u.shape != (ctx.M,):
        raise FeasibilityError("P1 decision has the wrong shape")
    if (split < 0).any():
        raise FeasibilityError("P1: offload amounts must be >= 0")
    if (split.sum(axis=1) > ctx.H_uav * (1 + tol) + 1.0).any():
        raise FeasibilityError("P1: offload split exceeds UAV backlog")
    if (f_u < 0).any() or (f_u > ctx.f_u_max * (1 + tol)).any():
        raise FeasibilityError("P1: UAV CPU frequency outside [0, f_max]")
    if (f_u * ctx.tau_eff / ctx.gamma > ctx.H_uav * (1 + tol) + 1.0).any():
        raise FeasibilityError("P1: local processing exceeds UAV backlog")


def p1_terms(ctx: ObjectiveContext, split, f_u) -> dict:
    """Per-UAV terms of the P1 objective; the objective is their total sum."""
    split = np.asarray(split, float)
    f_u = np.asarray(f_u, float)
    _check_p1(ctx, split, f_u)
    u, V, ep, g, te = ctx.lyap.queue_unit, ctx.lyap.v_weight, ctx.energy, ctx.gamma, ctx.tau_eff
    q_b, q_s = split[:, 1], split[:, 2]
    queue = ctx.H_uav / u * (ctx.hosted - q_b - q_s - f_u * te / g) / u
    collect = V * (ctx._zeros_m() if ctx.collect is None else np.asarray(ctx.collect, float))
    direct = V * (ctx._zeros_m() if ctx.direct is None else np.asarray(ctx.direct, float))
    local = V * ep.kappa * f_u ** 2 * g * ctx.H_uav
    r_us = np.asarray(ctx.rate_us, float)
    if ((q_s > 0) & (r_us <= 0)).any():
        raise InfeasibleTransmission("P1: satellite offload over a zero-rate link")
    sat_tx = V * ep.uav_sat_tx_power * np.divide(q_s, r_us, out=np.zeros_like(q_s), where=q_s > 0)
    sat_cpu = V * ep.kappa * ctx.sat_share ** 2 * g * q_s
    r_ub = ctx.assoc_rate()
    if ((q_b > 0) & (r_ub <= 0)).any():
        raise InfeasibleTransmission("P1: BS offload without an associated BS link")
    bs_tx = V * ep.uav_bs_tx_power * np.divide(q_b, r_ub, out=np.zeros_like(q_b), where=q_b > 0)
    f_bs_row = ctx._zeros_m() if ctx.f_bs_prev is None else np.sum(ctx.f_bs_prev, axis=1)
    bs_const = V * ep.kappa * f_bs_row ** 3 * te
    return dict(queue=queue, collect=collect, direct=direct, local=local, sat_tx=sat_tx,
                sat_cpu=sat_cpu, bs_tx=bs_tx, bs_const=bs_const)


def p1_objective(ctx: ObjectiveContext, split, f_u) -> float:
    return float(sum(np.sum(v) for v in p1_terms(ctx, split, f_u).values()))


def p1_per_uav(ctx: ObjectiveContext, split, f_u) -> np.ndarray:
    """Per-UAV share of the P1 objective (rewards for the parameter-shared agent)."""
    return np.sum(list(p1_terms(ctx, split, f_u).values()), axis=0)


def offered_bs_bits(ctx: ObjectiveContext, y) -> np.ndarray:
    """Q^{u,b} of each UAV under association y: P1's offer capped by the chosen link.

    Whole bits, as the queue realises them; a sub-bit offer sends nothing.
    """
    y = np.asarray(y)
    plan = ctx._zeros_m() if ctx.q_bs_plan is None else np.asarray(ctx.q_bs_plan, float)
    out = np.zeros(ctx.M)
    for m in range(ctx.M):
        for n in np.flatnonzero(y[m]):
            out[m] = min(bits_floor(plan[m]), bits_floor(ctx.tau_eff * ctx.rate_ub[m, n]))
    return out


def _check_y(ctx: ObjectiveContext, y: np.ndarray):
    if y.shape != (ctx.M, ctx.N):
        raise FeasibilityError("association has the wrong shape")
    if not np.isin(y, (0, 1)).all():
        raise FeasibilityError("association must be binary")
    if (y.sum(axis=1) > 1).any():
        raise FeasibilityError("a UAV is associated with more than one BS")
    if (y.astype(bool) & ~ctx.cover_mask()).any():
        raise FeasibilityError("association with a BS outside the UAV's coverage")


def p2_per_uav(ctx: ObjectiveContext, y) -> np.ndarray:
    y = np.asarray(y)
    _check_y(ctx, y)
    u, V, ep, g = ctx.lyap.queue_unit, ctx.lyap.v_weight, ctx.energy, ctx.gamma
    mask = ctx.cover_mask()
    q_b = offered_bs_bits(ctx, y)
    J = ctx.bs_service()
    f_prev = np.zeros_like(ctx.rate_ub) if ctx.f_bs_prev is None else np.asarray(ctx.f_bs_prev, float)
    out = np.zeros(ctx.M)
    for m in range(ctx.M):
        for n in np.flatnonzero(mask[m]):
            out[m] += ctx.H_bs[m, n] / u * (y[m, n] * q_b[m] - J[m, n]) / u
            if y[m, n]:
                if q_b[m] > 0 and ctx.rate_ub[m, n] <= 0:
                    raise InfeasibleTransmission("P2: BS offload over a zero-rate link")
                tx = ep.uav_bs_tx_power * q_b[m] / ctx.rate_ub[m, n] if q_b[m] > 0 else 0.0
                out[m] += V * (tx + ep.kappa * f_prev[m, n] ** 2 * g * ctx.H_bs[m, n])
    return out


def p2_objective(ctx: ObjectiveContext, y) -> float:
    return float(np.sum(p2_per_uav(ctx, y)))


def p3_objective(ctx: ObjectiveContext, f_bs, tol: float = 1e-9) -> float:
    """Sum over pairs of -H (tau-Delta) f / gamma + V kappa gamma H f^2 (queue terms in units)."""
    f = np.asarray(f_bs, float)
    if f.shape != ctx.H_bs.shape:
        raise FeasibilityError("BS allocation has the wrong shape")
    if (f < 0).any():
        raise FeasibilityError("P3: negative BS CPU allocation")
    fmax = np.broadcast_to(np.asarray(ctx.f_bs_max, float), (ctx.N,))
    if (f.sum(axis=0) > fmax * (1 + tol)).any():
        raise FeasibilityError("P3: BS CPU allocations exceed capacity")
    if (ctx.tau_eff * f / ctx.gamma > ctx.H_bs * (1 + tol) + 1e-9).any():
        raise FeasibilityError("P3: BS service exceeds BS backlog")
    u, V = ctx.lyap.queue_unit, ctx.lyap.v_weight
    H = ctx.H_bs.astype(float)
    return float(np.sum(-H / u * ctx.tau_eff * f / ctx.gamma / u
                        + V * ctx.energy.kappa * ctx.gamma * H * f ** 2))


def realize_split(ctx: ObjectiveContext, planned, f_u, y) -> np.ndarray:
    """Whole-bit (loc, bs, sat) amounts the queues can actually serve under association y."""
    planned = np.asarray(planned, float)
    y = np.asarray(y)
    r_ub = ctx.assoc_rate(y)
    out = np.zeros((ctx.M, 3), dtype=np.int64)
    for m in range(ctx.M):
        r = resolve_offload(int(ctx.H_uav[m]), OffloadSplit(*planned[m]), y[m], r_ub[m],
                            float(ctx.rate_us[m]), 1.0, 1.0 - ctx.tau_eff, float(f_u[m]), ctx.gamma)
        out[m] = r.as_tuple()
    return out
