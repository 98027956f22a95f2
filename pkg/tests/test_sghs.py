import numpy as np
import pytest
from scipy import stats

from saginsim.baselines import p3_analytic_oracle
from saginsim.p3 import P3Instance
from saginsim.sghs import SghsConfig, bw_schedule, improvise, sghs_minimize, solve_p3, write_trace


def test_bw_schedule_examples():
    cfg = SghsConfig()
    assert bw_schedule(0, cfg) == 0.5
    assert bw_schedule(5000, cfg) == 5e-4
    assert bw_schedule(9999, cfg) == 5e-4
    assert bw_schedule(2500, cfg) == pytest.approx(0.250250, abs=1e-12)
    vals = [bw_schedule(i, cfg) for i in range(0, 10000, 100)]
    assert (np.diff(vals) <= 0).all()


def test_config_validation():
    with pytest.raises(ValueError):
        SghsConfig(hms=0)
    with pytest.raises(ValueError):
        SghsConfig(bw_min=0.6, bw_max=0.5)


def test_pure_memory_consideration():
    rng = np.random.default_rng(0)
    hm = rng.random((5, 4))
    cand = improvise(hm, 1.0, 0.0, 0.3, rng, n=200)
    for j in range(4):
        assert np.isin(cand[:, j], hm[:, j]).all()


def test_zero_bandwidth_copies_memory():
    rng = np.random.default_rng(1)
    hm = rng.random((1, 3))
    cand = improvise(hm, 1.0, 1.0, 0.0, rng, n=10)
    assert (cand == hm[0]).all()


def test_random_selection_uniform():
    rng = np.random.default_rng(2)
    hm = np.full((4, 1), 0.5)
    cand = improvise(hm, 0.0, 0.5, 0.1, rng, n=10_000)[:, 0]
    assert stats.kstest(cand, "uniform").pvalue > 0.01


def test_improvise_stays_in_box():
    rng = np.random.default_rng(3)
    hm = np.full((3, 2), 0.99)
    cand = improvise(hm, 1.0, 1.0, 0.5, rng, n=1000)
    assert cand.min() >= 0.0 and cand.max() <= 1.0


def _quad(z):
    return (z[:, 0] - 0.3) ** 2


def test_quadratic_1d():
    cfg = SghsConfig(ni=2000)
    hits = 0
    for seed in range(30):
        best, trace = sghs_minimize(_quad, 1, cfg, np.random.default_rng(seed))
        hits += abs(best.vector[0] - 0.3) <= 1e-3
        assert (np.diff(trace) <= 0).all()
    assert hits >= 29


def test_reproducible_and_trace_csv(tmp_path):
    cfg = SghsConfig(ni=300)
    a, ta = sghs_minimize(_quad, 1, cfg, np.random.default_rng(5), trace_path=tmp_path / "t.csv")
    b, tb = sghs_minimize(_quad, 1, cfg, np.random.default_rng(5))
    assert a.fitness == b.fitness and (ta == tb).all()
    rows = (tmp_path / "t.csv").read_text().splitlines()
    assert rows[0] == "iter,best_fitness" and len(rows) == 301
    write_trace(tb, tmp_path / "u.csv")
    assert (tmp_path / "u.csv").read_text() == (tmp_path / "t.csv").read_text()


def test_p3_single_pair_capped_optimum():
    inst = P3Instance.from_arrays(np.array([[1e6]]), np.array([[1]]), 5e9)
    f, fit, _ = solve_p3(inst, SghsConfig(), np.random.default_rng(6))
    f_star = p3_analytic_oracle(inst)
    assert f_star[0] == pytest.approx(1e9 / 0.9, rel=1e-12)
    assert abs(f[0] - f_star[0]) <= 5e-3 * f_star[0]


def test_p3_single_pair_interior_optimum():
    # with Mbit queue units the stationary point 0.9 / (2 V kappa gamma^2 u^2) = 4.5e8 Hz is interior
    inst = P3Instance.from_arrays(np.array([[5e7]]), np.array([[1]]), 5e9, unit=1e6)
    f, _, _ = solve_p3(inst, SghsConfig(), np.random.default_rng(7))
    f_star = p3_analytic_oracle(inst)
    assert f_star[0] == pytest.approx(4.5e8, rel=1e-9)
    assert abs(f[0] - f_star[0]) <= 5e-3 * f_star[0]


def test_memory_feasible_under_coupling():
    H = np.array([[1e8, 0], [1e8, 0], [1e8, 0]])
    inst = P3Instance.from_arrays(H, H > 0, 5e9, unit=1.0)
    _, _, _ = solve_p3(inst, SghsConfig(ni=200), np.random.default_rng(8))
    z = inst.repair(np.random.default_rng(9).random((50, 3)))
    assert (inst.decode(z).sum(axis=1) <= 5e9 * (1 + 1e-12)).all()


def test_empty_instance():
    inst = P3Instance.from_arrays(np.zeros((2, 2)), np.zeros((2, 2)), 5e9)
    f, fit, trace = solve_p3(inst, SghsConfig(), np.random.default_rng(0))
    assert f.size == 0 and fit == 0.0 and trace.size == 0
