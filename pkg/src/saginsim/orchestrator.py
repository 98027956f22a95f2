"""Slot loop: perception and hosting, the P1/P2/P3 inner iteration, queue updates, metrics."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .agents import DdpgAgent, DdpgConfig, DqnAgent, DqnConfig, action_mask, actions_to_y
from .baselines import (SaConfig, backlog_instance, complete_offloading_split, decode_p1_action,
                        perception_free_hosting, perception_hosting, random_hosting,
                        random_policy, simulated_annealing_allocate)
from .channel import RadioModel, sample_ag_gain, sample_us_gain, shannon_rate
from .config import ExperimentConfig, config_hash
from .cost import (EnergyParams, bs_offload_cost, collection_cost, direct_sat_cost,
                   local_cost, sat_offload_cost, total_uav_cost)
from .lyapunov import (LyapunovConfig, ObjectiveContext, bound_holds, p1_per_uav, p2_per_uav,
                       p3_objective, pi_numerator, realize_split, sample_drift, theorem1_rhs)
from .perception import RadarConfig, perceive
from .queueing import (NetworkQueues, SlotDecision, advance_bs_queue, advance_uav_queue,
                       bits_floor, bs_service, sample_arrivals, validate_decision)
from .sghs import SghsConfig, solve_p3
from .world import build_topology, coverage_sets, distance, initial_devices, step_device

STREAMS = ("world", "channel", "perception", "arrivals", "policy", "p3")
LEARNING = ("drl_perception", "perception_free", "sim_annealing")
P1_STATE_DIM = 7


class AuditError(RuntimeError):
    """An invariant audit failed (bound, conservation or feasibility)."""


def _nl(x):
    """Compress a nonnegative magnitude (bits or bps) for network inputs."""
    return np.log1p(np.asarray(x, float) / 1e6) / 10.0


@dataclass
class Agents:
    ddpg: DdpgAgent | None = None
    dqn: DqnAgent | None = None


def p2_state_dim(num_bs: int) -> int:
    return 6 + 2 * num_bs


def make_agents(cfg: ExperimentConfig, method: str | None = None) -> Agents:
    method = method or cfg.method
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 7919]))
    out = Agents()
    if method in LEARNING:
        out.ddpg = DdpgAgent(P1_STATE_DIM, DdpgConfig.from_config(cfg), rng)
    if method in LEARNING or method == "complete_offload":
        out.dqn = DqnAgent(p2_state_dim(cfg.topology.num_bs), cfg.topology.num_bs,
                           DqnConfig.from_config(cfg), rng)
    return out


@dataclass
class Channels:
    rate_ub: np.ndarray   # (M, N)
    rate_us: np.ndarray   # (M,)
    rate_du: np.ndarray   # (K, M)
    rate_ds: np.ndarray   # (K,)


@dataclass
class SlotRecord:
    t: int
    method: str
    decision: SlotDecision
    costs: list
    queues_before: NetworkQueues
    queues_after: NetworkQueues
    drift: float
    dpp: float
    bound_rhs: float
    bound_ok: bool
    arrivals: np.ndarray          # (K,) bits generated this slot
    hosted: np.ndarray            # (M,) bits accepted by each UAV
    direct_bits: int
    uncovered_bits: int
    inner_iters: int = 1
    audit: dict = field(default_factory=dict)

    @property
    def slot_cost(self) -> float:
        return float(sum(c.total for c in self.costs))


def slot_costs(x, D, device_cover, ch: Channels, realized, f_u, H_uav, y, f_bs, H_bs,
               gamma: float, ep: EnergyParams) -> list:
    """Per-UAV cost breakdown of one slot, from decisions and channel rates only."""
    out = []
    for m, ids in enumerate(device_cover):
        ids = list(ids)
        col = collection_cost(x[ids, m], D[ids], ch.rate_du[ids, m], ep.device_tx_power) if ids else 0.0
        loc = local_cost(float(f_u[m]), int(H_uav[m]), gamma, ep.kappa)
        bs = bs_offload_cost(y[m], int(realized[m][1]), ch.rate_ub[m], f_bs[m], H_bs[m], gamma, ep)
        sat = sat_offload_cost(int(realized[m][2]), float(ch.rate_us[m]), gamma, ep)
        dsat = sum(direct_sat_cost(int(D[k]), float(ch.rate_ds[k]), gamma, ep) for k in ids if not x[k, m])
        out.append(total_uav_cost(col, loc, bs, sat, dsat))
    return out


class Simulator:
    """One seeded environment instance; agents are shared in from outside."""

    def __init__(self, cfg: ExperimentConfig, agents: Agents | None = None, stream_tag: int = 0):
        self.cfg = cfg
        self.method = cfg.method
        kids = np.random.SeedSequence([cfg.seed, stream_tag]).spawn(len(STREAMS))
        self.rng = {name: np.random.default_rng(s) for name, s in zip(STREAMS, kids)}
        self.radio = RadioModel.from_config(cfg)
        self.radar = RadarConfig.from_config(cfg)
        self.energy = EnergyParams.from_config(cfg)
        self.sghs_cfg = SghsConfig.from_config(cfg, online=True)
        self.sa_cfg = SaConfig.from_config(cfg)
        self.lyap = LyapunovConfig(cfg.v_weight, 0.0, cfg.queue_unit)
        self.agents = agents if agents is not None else make_agents(cfg)
        self.devices = initial_devices(cfg, self.rng["world"])
        M, N = cfg.topology.num_uavs, cfg.topology.num_bs
        self.queues = NetworkQueues.zeros(M, N)
        self.y_prev = np.zeros((M, N), dtype=np.int64)
        self.f_bs_prev = np.zeros((M, N))
        self.t = 0
        self.training = True
        self.worst_rate = float(self.radio.dev_uav_rate_at(cfg.topology.coverage_radius))

    # ---- environment draws ------------------------------------------------

    def _channels(self, topo) -> Channels:
        rng = self.rng["channel"]
        r = self.radio
        uavs, bss, devs = topo.uavs, topo.bs_positions, topo.devices
        d_ub = np.array([[distance(u.pos, b) for b in bss] for u in uavs]).reshape(len(uavs), len(bss))
        d_us = np.array([distance(u.pos, topo.satellite_pos) for u in uavs])
        d_du = np.array([[max(distance(d.pos, u.pos), 1.0) for u in uavs] for d in devs]).reshape(len(devs), len(uavs))
        d_ds = np.array([distance(d.pos, topo.satellite_pos) for d in devs])
        g_ub = sample_ag_gain(d_ub, r.ag, rng)
        g_us = sample_us_gain(d_us, r.sat, rng)
        g_du = sample_ag_gain(d_du, r.du, rng)
        g_ds = sample_us_gain(d_ds, r.sat, rng) if len(devs) else np.zeros(0)

        def rt(lb, g, sat):
            return np.asarray(shannon_rate(lb.bandwidth, lb.tx_power, g, lb.antenna_gain if sat else 1.0,
                                           lb.noise_psd), float).reshape(np.shape(g))
        return Channels(rt(r.uav_bs, g_ub, False), rt(r.uav_sat, g_us, True),
                        rt(r.dev_uav, g_du, False), rt(r.dev_sat, g_ds, True))

    def _context(self, cov, ch: Channels, hosted, collect, direct) -> ObjectiveContext:
        cfg = self.cfg
        return ObjectiveContext(
            H_uav=self.queues.uav.astype(float), H_bs=self.queues.bs.astype(float),
            hosted=hosted.astype(float), rate_ub=ch.rate_ub, rate_us=ch.rate_us,
            bs_cover=cov.bs_cover, gamma=cfg.compute.cycles_per_bit, tau_eff=cfg.tau_eff,
            f_u_max=cfg.compute.uav_cpu_max, f_bs_max=np.full(cfg.topology.num_bs, cfg.compute.bs_cpu_max),
            sat_share=cfg.compute.sat_cpu / cfg.topology.num_uavs, energy=self.energy, lyap=self.lyap,
            collect=collect, direct=direct, y_prev=None, f_bs_prev=self.f_bs_prev.copy())

    # ---- agent states -----------------------------------------------------

    def p1_states(self, ctx: ObjectiveContext, y, ct) -> np.ndarray:
        K = max(self.cfg.topology.num_devices, 1)
        return np.column_stack([_nl(ctx.assoc_rate(y)), _nl(ctx.rate_us), _nl(ctx.hosted),
                                _nl(ctx.H_uav), ct / K])

    def p2_states(self, ctx: ObjectiveContext, frac, f_u) -> np.ndarray:
        return np.column_stack([_nl(ctx.hosted), frac, f_u / ctx.f_u_max, _nl(ctx.H_uav),
                                _nl(ctx.H_bs), _nl(ctx.rate_ub)])

    # ---- per-subproblem solvers -------------------------------------------

    def _solve_p3(self, ctx: ObjectiveContext):
        inst = backlog_instance(ctx)
        if inst.dim == 0:
            return np.zeros_like(ctx.H_bs)
        caps = inst.caps
        warm = np.array([self.f_bs_prev[m, n] for m, n in inst.pairs]) / np.maximum(caps, 1e-300)
        warm = np.clip(warm, 0.0, 1.0)
        if self.method == "sim_annealing":
            f, _, _ = simulated_annealing_allocate(inst, self.sa_cfg, self.rng["p3"], warm)
        else:
            f, _, _ = solve_p3(inst, self.sghs_cfg, self.rng["p3"], warm)
        return inst.to_matrix(f)

    def _p1(self, ctx, y, ct, explore):
        """Returns (planned split, f_u, fractions, states, squashed actions)."""
        H = ctx.H_uav
        if self.method == "complete_offload":
            split, f_u = complete_offloading_split(ctx, y)
            frac = np.divide(split, H[:, None], out=np.zeros_like(split), where=H[:, None] > 0)
            return split, f_u, frac, None, None
        s = self.p1_states(ctx, y, ct)
        a = self.agents.ddpg.act(s, explore=explore, rng=self.rng["policy"])
        split, f_u = decode_p1_action(ctx, a)
        return split, f_u, a[:, :3], s, a

    def _p2(self, ctx, frac, f_u, explore):
        s = self.p2_states(ctx, frac, f_u)
        N = ctx.N
        masks = np.array([action_mask(c, N) for c in ctx.bs_cover])
        eps = None if explore else 0.0
        acts = self.agents.dqn.act(s, masks, epsilon=eps, rng=self.rng["policy"])
        return actions_to_y(acts, N), s, acts, masks

    # ---- one slot -----------------------------------------------------------

    def run_slot(self) -> SlotRecord:
        cfg, method = self.cfg, self.method
        M, N, K = cfg.topology.num_uavs, cfg.topology.num_bs, cfg.topology.num_devices
        gamma, te = cfg.compute.cycles_per_bit, cfg.tau_eff
        topo = build_topology(cfg, self.devices, self.t)
        cov = coverage_sets(topo)
        ch = self._channels(topo)
        D = sample_arrivals(self.devices, self.rng["arrivals"], cfg.tasks.task_size, cfg.tasks.max_tasks_per_slot)
        by_id = {d.id: d for d in self.devices}
        reports = [perceive(topo.uavs[m], [by_id[k] for k in cov.device_cover[m]], self.radar,
                            self.rng["perception"], self.radio, cfg.radar.classifier_accuracy)
                   for m in range(M)]

        # Phase 1: hosting
        if method == "random":
            x = random_hosting(cov.device_cover, K, self.rng["policy"])
        elif method == "perception_free":
            x = perception_free_hosting(reports, D, K, cfg.tasks.delta, self.worst_rate)
        else:
            x = perception_hosting(reports, D, K, cfg.tasks.delta, cfg.tasks.v_bar)
        hosted = np.array([int(np.dot(x[:, m], D)) for m in range(M)], dtype=np.int64)
        covered = np.zeros(K, dtype=bool)
        for ids in cov.device_cover:
            covered[list(ids)] = True
        direct_bits = int(sum(int(D[k]) for k in range(K) if covered[k] and not x[k].any()))
        uncovered_bits = int(D[~covered].sum())
        collect, direct = np.zeros(M), np.zeros(M)
        for m, ids in enumerate(cov.device_cover):
            ids = list(ids)
            if ids:
                collect[m] = collection_cost(x[ids, m], D[ids], ch.rate_du[ids, m], self.energy.device_tx_power)
                direct[m] = sum(direct_sat_cost(int(D[k]), float(ch.rate_ds[k]), gamma, self.energy)
                                for k in ids if not x[k, m])
        ct = np.zeros((M, 3))
        if method != "perception_free":
            for m, reps in enumerate(reports):
                for r in reps:
                    ct[m, int(r.est_type)] += 1

        ctx = self._context(cov, ch, hosted, collect, direct)
        cover_mask = ctx.cover_mask()
        y_cur = self.y_prev * cover_mask
        explore = self.training

        # Phase 2
        iters = 1
        masks = None
        if method == "random":
            dec = random_policy(ctx, self.rng["policy"])
            planned, f_u, y, f_bs = dec.split, dec.f_u, dec.association, dec.f_bs
            p1_pack = p2_pack = None
        else:
            f_bs_cur = self.f_bs_prev.copy()
            f_bs_new = self._solve_p3(ctx)
            best = None
            for it in range(cfg.inner_iters):
                planned_i, f_u_i, frac_i, s1, a1 = self._p1(ctx, y_cur, ct, explore)
                ctx.y_prev = y_cur
                real_p1 = realize_split(ctx, planned_i, f_u_i, y_cur)
                # rewards are measured against the idle action; the state-only offset
                # would otherwise swamp the action signal in the critic
                r1 = (p1_per_uav(ctx, np.zeros((M, 3)), np.zeros(M)) - p1_per_uav(ctx, real_p1, f_u_i))
                ctx.q_bs_plan = np.minimum(planned_i[:, 1], np.maximum(ctx.H_uav - real_p1[:, 0], 0.0))
                ctx.f_bs_prev = f_bs_cur
                y_i, s2, a2, masks = self._p2(ctx, frac_i, f_u_i, explore)
                r2 = p2_per_uav(ctx, np.zeros_like(y_i)) - p2_per_uav(ctx, y_i)
                # the full decision, valued under its own association
                real_i = realize_split(ctx, planned_i, f_u_i, y_i)
                ctx.y_prev = y_i
                ctx.f_bs_prev = f_bs_new
                val = (float(np.sum(p1_per_uav(ctx, real_i, f_u_i))) + float(np.sum(p2_per_uav(ctx, y_i)))
                       + p3_objective(ctx, f_bs_new))
                iters = it + 1
                if best is not None and val >= best[0]:
                    break
                best = (val, planned_i, f_u_i, y_i, (s1, a1, r1), (s2, a2, r2))
                y_cur, f_bs_cur = y_i, f_bs_new
            _, planned, f_u, y, p1_pack, p2_pack = best
            f_bs = f_bs_new
            ctx.f_bs_prev = self.f_bs_prev.copy()

        ctx.y_prev = y
        realized = realize_split(ctx, planned, f_u, y)
        dec = SlotDecision(x, y, np.asarray(planned, float), np.asarray(f_u, float), np.asarray(f_bs, float))
        dec.extras["realized"] = realized
        try:
            validate_decision(dec, self.queues.uav, cov.bs_cover, cfg.compute.uav_cpu_max,
                              cfg.compute.bs_cpu_max, realized=[_Split(r) for r in realized])
        except Exception as exc:  # solver bug: stop the run
            raise AuditError(f"slot {self.t}: infeasible decision ({exc})") from exc

        # queue advancement with the final decision
        q0 = self.queues
        J = np.zeros((M, N), dtype=np.int64)
        new_uav = np.zeros(M, dtype=np.int64)
        new_bs = np.zeros((M, N), dtype=np.int64)
        for m in range(M):
            rs = _Split(realized[m])
            new_uav[m] = advance_uav_queue(int(q0.uav[m]), rs, int(hosted[m]))
            for n in range(N):
                J[m, n] = bs_service(int(q0.bs[m, n]), float(f_bs[m, n]), cfg.tasks.slot_len, cfg.tasks.delta, gamma)
                new_bs[m, n] = advance_bs_queue(int(q0.bs[m, n]), int(J[m, n]), int(y[m, n]), int(realized[m][1]))
        q1 = NetworkQueues(new_uav, new_bs)
        dec.extras["J_bs"] = J

        costs = slot_costs(x, D, cov.device_cover, ch, realized, f_u, q0.uav, y, f_bs, q0.bs, gamma, self.energy)
        G = float(sum(c.total for c in costs))

        # per-slot maxima for the bound constant
        f_cap = bits_floor(te * cfg.compute.uav_cpu_max / gamma)
        qb_max = np.array([[bits_floor(te * r) for r in row] for row in ch.rate_ub], dtype=object).reshape(M, N)
        s_max = [f_cap + (max(qb_max[m]) if N else 0) + bits_floor(te * ch.rate_us[m]) for m in range(M)]
        d_max = [cfg.tasks.max_tasks_per_slot * cfg.tasks.task_size * K] * M
        jb_max = [[bits_floor(te * cfg.compute.bs_cpu_max / gamma)] * N for _ in range(M)]
        pi_num = pi_numerator(d_max, s_max, qb_max, jb_max)
        u = cfg.queue_unit
        lyap = LyapunovConfig(cfg.v_weight, pi_num / 2.0 / u ** 2, u)
        drift = sample_drift(q0, q1, u)
        dpp = drift + cfg.v_weight * G
        rhs = theorem1_rhs(q0.uav, q0.bs, hosted, realized, y, J, G, lyap)
        ok = bound_holds(q0, q1, hosted, realized, y, J, pi_num)

        # learning feedback
        if self.training and method != "random":
            self._learn(p1_pack, p2_pack, masks)

        rec = SlotRecord(self.t, method, dec, costs, q0, q1, drift, dpp, rhs, ok, D, hosted,
                         direct_bits, uncovered_bits, iters)
        rec.audit = dict(rate_ub=ch.rate_ub, rate_us=ch.rate_us, rate_du=ch.rate_du, rate_ds=ch.rate_ds,
                         device_cover=cov.device_cover, bs_cover=cov.bs_cover)

        # advance the world
        self.queues = q1
        self.y_prev = y.astype(np.int64)
        self.f_bs_prev = np.asarray(f_bs, float)
        self.devices = tuple(step_device(d, cfg.tasks.slot_len, self.rng["world"], cfg.topology.p_turn)
                             for d in self.devices)
        self.t += 1
        return rec

    def _learn(self, p1_pack, p2_pack, masks) -> None:
        a_cfg = self.cfg.agents
        if p1_pack is not None and self.agents.ddpg is not None and p1_pack[0] is not None:
            s, a, r = p1_pack
            ag = self.agents.ddpg
            for m in range(len(r)):
                ag.remember(s[m], a[m], r[m], s[m], True)
            if len(ag.buffer) >= a_cfg.train_start:
                for _ in range(a_cfg.updates_per_slot):
                    ag.update()
        if p2_pack is not None and self.agents.dqn is not None:
            s, a, r = p2_pack
            ag = self.agents.dqn
            for m in range(len(r)):
                ag.remember(s[m], a[m], r[m], s[m], True, masks[m])
            if len(ag.buffer) >= a_cfg.train_start:
                for _ in range(a_cfg.updates_per_slot):
                    ag.update()


@dataclass(frozen=True)
class _Split:
    """Adapter giving an (loc, bs, sat) row the OffloadSplit interface."""

    row: tuple

    def __init__(self, row):
        object.__setattr__(self, "row", tuple(int(v) for v in row))

    @property
    def q_loc(self):
        return self.row[0]

    @property
    def q_bs(self):
        return self.row[1]

    @property
    def q_sat(self):
        return self.row[2]

    @property
    def total(self):
        return sum(self.row)


def conservation_audit(records) -> dict:
    """Integer flow accounting over a run: arrivals = direct + uncovered + served + backlog change."""
    if not records:
        return dict(ok=True, error=0)
    arrivals = sum(int(r.arrivals.sum()) for r in records)
    direct = sum(r.direct_bits for r in records)
    uncovered = sum(r.uncovered_bits for r in records)
    served_loc = sum(int(r.decision.extras["realized"][:, 0].sum()) for r in records)
    served_sat = sum(int(r.decision.extras["realized"][:, 2].sum()) for r in records)
    served_bs = sum(int(r.decision.extras["J_bs"].sum()) for r in records)
    backlog_delta = records[-1].queues_after.total() - records[0].queues_before.total()
    err = arrivals - (direct + uncovered + served_loc + served_sat + served_bs + backlog_delta)
    # per-slot checks as well, so a compensating pair of errors cannot hide
    slot_err = 0
    for r in records:
        real = r.decision.extras["realized"]
        lhs = int(r.hosted.sum()) - int(real.sum()) - (r.queues_after.uav.sum() - r.queues_before.uav.sum())
        rhs = int((r.decision.association * real[:, 1:2]).sum()) - int(r.decision.extras["J_bs"].sum())
        rhs -= int(r.queues_after.bs.sum() - r.queues_before.bs.sum())
        slot_err += abs(int(lhs)) + abs(int(rhs))
        slot_err += abs(int(r.arrivals.sum()) - int(r.hosted.sum()) - r.direct_bits - r.uncovered_bits)
    return dict(ok=(err == 0 and slot_err == 0), error=int(err), slot_error=int(slot_err),
                arrivals=arrivals, direct=direct, uncovered=uncovered, served_local=served_loc,
                served_sat=served_sat, served_bs=served_bs, backlog_delta=int(backlog_delta))


def summarize(records) -> dict:
    """Running time-averages per slot of cost and each queue family."""
    cost = np.array([r.slot_cost for r in records])
    hu = np.array([float(np.mean(r.queues_after.uav)) for r in records])
    hb = np.array([float(np.mean(r.queues_after.bs)) if r.queues_after.bs.size else 0.0 for r in records])
    n = np.arange(1, len(records) + 1)
    return dict(cost=cost, H_u=hu, H_bs=hb, avg_cost=np.cumsum(cost) / n, avg_H_u=np.cumsum(hu) / n,
                avg_H_bs=np.cumsum(hb) / n)


def run_experiment(cfg: ExperimentConfig, agents: Agents | None = None, progress=None):
    """Warm-up (optional, separate streams) then the measured run; returns (records, summary)."""
    agents = agents if agents is not None else make_agents(cfg)
    if cfg.warmup_slots > 0 and cfg.method != "random":
        warm = Simulator(cfg, agents, stream_tag=1)
        for _ in range(cfg.warmup_slots):
            warm.run_slot()
    sim = Simulator(cfg, agents, stream_tag=0)
    records = []
    for t in range(cfg.slots):
        records.append(sim.run_slot())
        if progress is not None:
            progress(t)
    return records, run_summary(cfg, records)


def run_summary(cfg: ExperimentConfig, records) -> dict:
    s = summarize(records)
    cons = conservation_audit(records)
    T = len(records)
    violations = sum(1 for r in records if not r.bound_ok)
    return dict(
        version=__version__, method=cfg.method, seed=cfg.seed, slots=T, v_weight=cfg.v_weight,
        config_hash=config_hash(cfg),
        time_avg_cost=float(s["avg_cost"][-1]) if T else 0.0,
        time_avg_H_u=float(s["avg_H_u"][-1]) if T else 0.0,
        time_avg_H_bs=float(s["avg_H_bs"][-1]) if T else 0.0,
        bound_violations=violations, conservation=cons,
        mean_inner_iters=float(np.mean([r.inner_iters for r in records])) if T else 0.0,
    )


CSV_FIELDS = ["t", "method", "seed", "cost_total", "cost_collect", "cost_local", "cost_bs", "cost_sat",
              "cost_direct", "H_u_mean", "H_bs_mean", "avg_cost", "avg_H_u", "avg_H_bs", "drift", "dpp",
              "bound_rhs", "bound_ok", "arrivals", "hosted", "direct_bits", "uncovered_bits",
              "served_local", "served_bs", "served_sat", "inner_iters"]


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


def write_records_csv(path, records, seed: int) -> None:
    s = summarize(records)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_FIELDS)
        for i, r in enumerate(records):
            parts = [sum(getattr(c, k) for c in r.costs) for k in ("collect", "local", "bs", "sat", "direct_sat")]
            real = r.decision.extras["realized"]
            row = [r.t, r.method, seed, r.slot_cost, *[float(p) for p in parts],
                   float(s["H_u"][i]), float(s["H_bs"][i]), float(s["avg_cost"][i]),
                   float(s["avg_H_u"][i]), float(s["avg_H_bs"][i]), r.drift, r.dpp, r.bound_rhs,
                   int(r.bound_ok), int(r.arrivals.sum()), int(r.hosted.sum()), r.direct_bits,
                   r.uncovered_bits, int(real[:, 0].sum()), int(r.decision.extras["J_bs"].sum()),
                   int(real[:, 2].sum()), r.inner_iters]
            w.writerow([_fmt(v) for v in row])


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()] if v.dtype == object else v.tolist()
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def write_decisions(path, records) -> None:
    """One JSON line per slot with every input needed to recompute costs and queues."""
    with open(path, "w") as fh:
        for r in records:
            d = r.decision
            row = dict(t=r.t, x=d.hosting, y=d.association, realized=d.extras["realized"], f_u=d.f_u,
                       f_bs=d.f_bs, J_bs=d.extras["J_bs"], D=r.arrivals, hosted=r.hosted,
                       H_uav=r.queues_before.uav, H_bs=r.queues_before.bs, H_uav_next=r.queues_after.uav,
                       H_bs_next=r.queues_after.bs, costs=[c.total for c in r.costs], **r.audit)
            fh.write(json.dumps({k: _jsonable(v) for k, v in row.items()}) + "\n")


def write_summary(path, summary: dict) -> None:
    Path(path).write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")


def audit_decisions(cfg: ExperimentConfig, decisions_path, csv_path=None) -> dict:
    """Recompute every slot's costs and queue transitions from the decision log and diff them."""
    ep = EnergyParams.from_config(cfg)
    gamma = cfg.compute.cycles_per_bit
    worst_cost, worst_queue = 0.0, 0
    n = 0
    logged = []
    with open(decisions_path) as fh:
        for line in fh:
            row = json.loads(line)
            ch = Channels(np.array(row["rate_ub"], float).reshape(len(row["H_uav"]), -1),
                          np.array(row["rate_us"], float),
                          np.array(row["rate_du"], float).reshape(len(row["D"]), -1),
                          np.array(row["rate_ds"], float))
            x = np.array(row["x"], dtype=np.int64).reshape(len(row["D"]), -1)
            y = np.array(row["y"], dtype=np.int64).reshape(len(row["H_uav"]), -1)
            real = np.array(row["realized"], dtype=np.int64)
            H_bs = np.array(row["H_bs"], dtype=np.int64).reshape(y.shape)
            costs = slot_costs(x, np.array(row["D"], dtype=np.int64), row["device_cover"], ch, real,
                               np.array(row["f_u"], float), row["H_uav"], y,
                               np.array(row["f_bs"], float).reshape(y.shape), H_bs, gamma, ep)
            for a, b in zip(costs, row["costs"]):
                worst_cost = max(worst_cost, abs(a.total - b))
            for m in range(len(row["H_uav"])):
                nxt = advance_uav_queue(row["H_uav"][m], _Split(real[m]), row["hosted"][m])
                worst_queue = max(worst_queue, abs(nxt - row["H_uav_next"][m]))
                for k in range(y.shape[1]):
                    J = row["J_bs"][m][k]
                    nb = advance_bs_queue(H_bs[m, k], J, y[m, k], real[m][1])
                    worst_queue = max(worst_queue, abs(nb - row["H_bs_next"][m][k]))
            logged.append(sum(c.total for c in costs))
            n += 1
    csv_diff = 0.0
    if csv_path is not None:
        with open(csv_path) as fh:
            for i, rec in enumerate(csv.DictReader(fh)):
                csv_diff = max(csv_diff, abs(float(rec["cost_total"]) - logged[i]))
    ok = worst_cost == 0.0 and worst_queue == 0 and csv_diff == 0.0
    return dict(ok=ok, slots=n, max_cost_diff=worst_cost, max_queue_diff=int(worst_queue),
                max_csv_cost_diff=csv_diff)
