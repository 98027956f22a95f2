from dataclasses import replace

import numpy as np
import pytest
from conftest import random_context
from hypothesis import given, settings
from hypothesis import strategies as st

from saginsim.baselines import exhaustive_p2_oracle
from saginsim.lyapunov import (LyapunovConfig, ObjectiveContext, bound_holds, drift_plus_penalty,
                               lyapunov_value, offered_bs_bits, p1_objective, p1_terms, p2_objective, p2_per_uav,
                               p3_objective, pi_from_caps, pi_numerator, realize_split, sample_drift,
                               theorem1_rhs)
from saginsim.queueing import (FeasibilityError, NetworkQueues, OffloadSplit, advance_bs_queue,
                               advance_uav_queue, bits_floor, bs_service, resolve_offload)


def Q(uav, bs):
    return NetworkQueues(np.array(uav, dtype=np.int64), np.array(bs, dtype=np.int64).reshape(len(uav), -1))


def test_lyapunov_value_examples():
    assert lyapunov_value(Q([0, 0], [[0], [0]])) == 0
    assert lyapunov_value(Q([4], [[0]])) == 8
    assert lyapunov_value(Q([3], [[4]])) == 12.5
    assert lyapunov_value(Q([3e6], [[4e6]]), unit=1e6) == 12.5


def test_drift_examples():
    a, b = Q([3], [[4]]), Q([4], [[0]])
    assert sample_drift(a, a) == 0
    assert sample_drift(a, b) == -4.5
    assert sample_drift(a, b) == -sample_drift(b, a)


def test_drift_plus_penalty_examples():
    assert drift_plus_penalty(-4.5, 2.0, 0.0) == -4.5
    assert drift_plus_penalty(-4.5, 2.0, 1.0) == -2.5
    vals = [drift_plus_penalty(1.0, 3.0, V) for V in (0, 1, 2, 3)]
    assert np.allclose(np.diff(vals), 3.0)


def test_rhs_on_empty_slot_is_pi():
    lyap = LyapunovConfig(1.0, 7.25, 1.0)
    z = np.zeros((2, 3), dtype=np.int64)
    rhs = theorem1_rhs(np.zeros(2), np.zeros((2, 1)), np.zeros(2), z, np.zeros((2, 1)), np.zeros((2, 1)), 0.0, lyap)
    assert rhs == 7.25


def test_rhs_linear_in_v():
    rng = np.random.default_rng(0)
    H, Hb = rng.integers(0, 10 ** 7, 2), rng.integers(0, 10 ** 6, (2, 2))
    real = rng.integers(0, 10 ** 5, (2, 3))
    y = np.array([[1, 0], [0, 0]])
    J = rng.integers(0, 10 ** 5, (2, 2))
    G = 3.7
    a = theorem1_rhs(H, Hb, [5, 6], real, y, J, G, LyapunovConfig(1.0, 2.0, 1e3))
    b = theorem1_rhs(H, Hb, [5, 6], real, y, J, G, LyapunovConfig(1.5, 2.0, 1e3))
    assert b - a == pytest.approx(0.5 * G, rel=1e-9)


def test_pi_from_caps_matches_formula():
    pi = pi_from_caps([3, 4], [1, 2], [[1, 0], [2, 2]], [[0, 1], [1, 1]])
    want = 0.5 * (9 + 16 + 1 + 4) + 0.5 * (1 + 0 + 4 + 4 + 0 + 1 + 1 + 1)
    assert pi == want
    assert pi_numerator([3, 4], [1, 2], [[1, 0], [2, 2]], [[0, 1], [1, 1]]) == 2 * want


def test_bound_on_random_slots():
    """10^3 random feasible slots, Pi from per-slot caps: no violations, exact and in floats."""
    rng = np.random.default_rng(1)
    M, N, te, g = 3, 2, 0.9, 1000.0
    u = 1e6
    violations = 0
    for _ in range(1000):
        H = rng.integers(0, 5 * 10 ** 8, M)
        Hb = rng.integers(0, 10 ** 8, (M, N))
        hosted = rng.integers(0, 5, M) * 80_000_000
        r_ub, r_us = 10 ** rng.uniform(6, 9, (M, N)), 10 ** rng.uniform(6, 9, M)
        f_u, f_bs = rng.uniform(0, 3e8, M), rng.uniform(0, 2.5e9, (M, N))
        y = np.zeros((M, N), dtype=np.int64)
        for m in range(M):
            if rng.random() < 0.6:
                y[m, rng.integers(N)] = 1
        realized = np.zeros((M, 3), dtype=np.int64)
        q1 = NetworkQueues.zeros(M, N)
        J = np.zeros((M, N), dtype=np.int64)
        for m in range(M):
            frac = rng.dirichlet(np.ones(3))
            rb = float(np.sum(y[m] * r_ub[m]))
            r = resolve_offload(int(H[m]), OffloadSplit(*(frac * H[m])), y[m], rb, r_us[m], 1.0, 0.1, f_u[m], g)
            realized[m] = r.as_tuple()
            q1.uav[m] = advance_uav_queue(int(H[m]), r, int(hosted[m]))
            for n in range(N):
                J[m, n] = bs_service(int(Hb[m, n]), f_bs[m, n], 1.0, 0.1, g)
                q1.bs[m, n] = advance_bs_queue(int(Hb[m, n]), int(J[m, n]), int(y[m, n]), r.q_bs)
        s_max = [bits_floor(te * 3e8 / g) + bits_floor(te * max(r_ub[m])) + bits_floor(te * r_us[m]) for m in range(M)]
        qb_max = [[bits_floor(te * v) for v in row] for row in r_ub]
        jb_max = [[bits_floor(te * 5e9 / g)] * N for _ in range(M)]
        d_max = [4 * 80_000_000] * M
        pi_num = pi_numerator(d_max, s_max, qb_max, jb_max)
        q0 = NetworkQueues(H.astype(np.int64), Hb.astype(np.int64))
        G = float(rng.uniform(0, 50))
        V = float(rng.choice([0.1, 1.0, 10.0]))
        lyap = LyapunovConfig(V, pi_num / 2 / u ** 2, u)
        exact = bound_holds(q0, q1, hosted, realized, y, J, pi_num)
        rhs = theorem1_rhs(H, Hb, hosted, realized, y, J, G, lyap)
        lhs = drift_plus_penalty(sample_drift(q0, q1, u), G, V)
        violations += (not exact) + (lhs > rhs + 1e-9 * abs(rhs))
    assert violations == 0


# ---- P1 ------------------------------------------------------------------

def _p1_duplicate(ctx: ObjectiveContext, split, f_u) -> float:
    """Independent term-by-term evaluation of the P1 objective."""
    u, V, ep = ctx.lyap.queue_unit, ctx.lyap.v_weight, ctx.energy
    total = 0.0
    for m in range(ctx.M):
        ql, qb, qs = split[m]
        H = ctx.H_uav[m]
        total += (H / u) * ((ctx.hosted[m] - qb - qs - f_u[m] * ctx.tau_eff / ctx.gamma) / u)
        pen = ctx.collect[m] + ctx.direct[m]
        pen += ep.kappa * f_u[m] ** 2 * ctx.gamma * H
        if qs > 0:
            pen += ep.uav_sat_tx_power * qs / ctx.rate_us[m]
        pen += ep.kappa * ctx.sat_share ** 2 * ctx.gamma * qs
        if qb > 0:
            n = int(np.argmax(ctx.y_prev[m]))
            pen += ep.uav_bs_tx_power * qb / ctx.rate_ub[m, n]
        pen += ep.kappa * ctx.f_bs_prev[m].sum() ** 3 * ctx.tau_eff
        total += V * pen
    return total


def _random_p1_decision(ctx, rng):
    frac = rng.dirichlet(np.ones(3), size=ctx.M)
    frac[ctx.y_prev.sum(axis=1) == 0, 1] = 0.0
    split = frac * ctx.H_uav[:, None]
    f_u = rng.uniform(0, 1, ctx.M) * np.minimum(ctx.f_u_max, ctx.gamma * split[:, 0] / ctx.tau_eff)
    return split, f_u


def test_p1_duplicate_evaluator():
    rng = np.random.default_rng(2)
    for _ in range(100):
        ctx = random_context(rng)
        split, f_u = _random_p1_decision(ctx, rng)
        a, b = p1_objective(ctx, split, f_u), _p1_duplicate(ctx, split, f_u)
        assert abs(a - b) <= 1e-12 * max(abs(b), 1.0)


def test_p1_zero_decision_zero_state():
    ctx = ObjectiveContext(np.zeros(2), np.zeros((2, 1)), np.zeros(2), np.ones((2, 1)), np.ones(2), ((0,), ()))
    assert p1_objective(ctx, np.zeros((2, 3)), np.zeros(2)) == 0.0


def test_p1_v_zero_leaves_queue_bracket():
    rng = np.random.default_rng(3)
    ctx = replace(random_context(rng), lyap=LyapunovConfig(0.0, 0.0, 1e6))
    split, f_u = _random_p1_decision(ctx, rng)
    terms = p1_terms(ctx, split, f_u)
    assert all(np.all(v == 0) for k, v in terms.items() if k != "queue")
    assert p1_objective(ctx, split, f_u) == pytest.approx(float(np.sum(terms["queue"])))


def test_p1_rejects_infeasible():
    ctx = random_context(np.random.default_rng(4))
    split = np.zeros((ctx.M, 3))
    split[0, 2] = 2 * ctx.H_uav[0]
    with pytest.raises(FeasibilityError, match="exceeds UAV backlog"):
        p1_objective(ctx, split, np.zeros(ctx.M))
    with pytest.raises(FeasibilityError, match="CPU"):
        p1_objective(ctx, np.zeros((ctx.M, 3)), np.full(ctx.M, 1e9))


# ---- P2 ------------------------------------------------------------------

def _one_by_one(H_bs=2e6, f_prev=1e9, plan=5e5, V=1.0):
    return ObjectiveContext(np.array([1e7]), np.array([[H_bs]]), np.zeros(1), np.array([[4e8]]),
                            np.array([1e7]), ((0,),), f_bs_max=np.array([5e9]),
                            lyap=LyapunovConfig(V, 0.0, 1.0), f_bs_prev=np.array([[f_prev]]),
                            q_bs_plan=np.array([plan]))


def test_p2_all_none_hand_value():
    ctx = _one_by_one()
    J = min(2e6, np.floor(0.9 * 1e9 / 1000))
    assert p2_objective(ctx, np.zeros((1, 1), int)) == pytest.approx(-2e6 * J)


def test_p2_associated_hand_value():
    ctx = _one_by_one()
    ep = ctx.energy
    want = 2e6 * (5e5 - 9e5) + ep.uav_bs_tx_power * 5e5 / 4e8 + ep.kappa * 1e18 * 1000 * 2e6
    assert p2_objective(ctx, np.ones((1, 1), int)) == pytest.approx(want, rel=1e-12)


def test_p2_two_bs_exhaustive_matches_argmin():
    rng = np.random.default_rng(5)
    for _ in range(50):
        ctx = random_context(rng, M=1, N=2, full_cover=True)
        options = [np.array([[0, 0]]), np.array([[1, 0]]), np.array([[0, 1]])]
        vals = [p2_objective(ctx, y) for y in options]
        assert p2_objective(ctx, exhaustive_p2_oracle(ctx)) == min(vals)


def test_p2_v_zero_is_backlog_term():
    rng = np.random.default_rng(6)
    ctx = random_context(rng, V=0.0, full_cover=True)
    y = np.zeros((ctx.M, ctx.N), int)
    y[:, 0] = 1
    J = ctx.bs_service()
    qb = offered_bs_bits(ctx, y)
    u = ctx.lyap.queue_unit
    want = np.sum(ctx.H_bs / u * (y * qb[:, None] - J) / u)
    assert p2_objective(ctx, y) == pytest.approx(want, rel=1e-12)


def test_p2_rejects_infeasible():
    ctx = random_context(np.random.default_rng(7), full_cover=True)
    y = np.ones((ctx.M, ctx.N), int)
    with pytest.raises(FeasibilityError):
        p2_per_uav(ctx, y)


# ---- P3 ------------------------------------------------------------------

def _p3_ctx(H, f_max=5e9, V=1.0, unit=1.0):
    H = np.atleast_2d(np.asarray(H, float))
    return ObjectiveContext(np.zeros(H.shape[0]), H, np.zeros(H.shape[0]), np.ones(H.shape), np.ones(H.shape[0]),
                            tuple(tuple(range(H.shape[1])) for _ in range(H.shape[0])),
                            f_bs_max=np.full(H.shape[1], f_max), lyap=LyapunovConfig(V, 0.0, unit))


def test_p3_examples():
    ctx = _p3_ctx([[1e6]])
    assert p3_objective(ctx, np.zeros((1, 1))) == 0.0
    # -H (tau-Delta) f / gamma + kappa gamma H f^2 = -9e11 + 1
    val = p3_objective(ctx, np.array([[1e9]]))
    assert val == pytest.approx(-9e11 + 1.0, rel=1e-15)
    # the served bits (tau-Delta) f / gamma = 9e5 fit inside the backlog
    assert 0.9 * 1e9 / 1000 <= 1e6


def test_p3_convex_per_coordinate():
    ctx = _p3_ctx([[1e7]], unit=1e6)
    f = np.linspace(0, 5e9, 50)
    vals = np.array([p3_objective(ctx, np.array([[v]])) for v in f])
    assert (np.diff(vals, 2) > 0).all()


def test_p3_rejects_infeasible():
    ctx = _p3_ctx([[1e6, 1e6], [1e6, 1e6]])
    with pytest.raises(FeasibilityError, match="capacity"):
        p3_objective(ctx, np.array([[1e9, 0], [4.5e9, 0]]))
    with pytest.raises(FeasibilityError, match="backlog"):
        p3_objective(ctx, np.array([[2e9, 0], [0, 0]]))


@settings(max_examples=100)
@given(st.lists(st.floats(0, 1), min_size=4, max_size=4), st.lists(st.floats(1e4, 1e8), min_size=4, max_size=4))
def test_p3_separable(z, H):
    ctx = _p3_ctx(np.reshape(H, (2, 2)), f_max=1e12, unit=1e6)
    caps = ctx.gamma * ctx.H_bs / ctx.tau_eff
    f = np.reshape(z, (2, 2)) * caps
    whole = p3_objective(ctx, f)
    parts = 0.0
    for idx in np.ndindex(2, 2):
        single = np.zeros((2, 2))
        single[idx] = f[idx]
        parts += p3_objective(ctx, single)
    assert whole == pytest.approx(parts, rel=1e-9, abs=1e-9)


def test_realize_split_respects_backlog():
    rng = np.random.default_rng(8)
    for _ in range(50):
        ctx = random_context(rng)
        split, f_u = _random_p1_decision(ctx, rng)
        real = realize_split(ctx, split, f_u, ctx.y_prev)
        assert (real >= 0).all()
        assert (real.sum(axis=1) <= ctx.H_uav).all()
        assert (real <= np.floor(split) + 1).all()


def test_p2_sub_bit_offer_sends_nothing():
    ctx = _one_by_one(H_bs=0.0, plan=0.4)
    assert offered_bs_bits(ctx, np.ones((1, 1), int))[0] == 0
    assert p2_objective(ctx, np.ones((1, 1), int)) == p2_objective(ctx, np.zeros((1, 1), int)) == 0.0
