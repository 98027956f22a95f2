import json

import numpy as np
import pytest

import saginsim.orchestrator as orch
from saginsim.config import dbm_to_watt, from_dict
from saginsim.orchestrator import (Channels, Simulator, audit_decisions, conservation_audit, make_agents,
                                   run_experiment, summarize, write_decisions, write_records_csv)


def _small(**kw):
    base = {"slots": 12, "warmup_slots": 0, "inner_iters": 3, "sghs.online_ni": 40, "sa.iters": 60,
            "agents.train_start": 8, "agents.batch_size": 8, "agents.hidden": 16}
    base.update(kw)
    return from_dict({}).with_overrides(**base)


def test_zero_arrival_slot_costs_nothing():
    cfg = _small(**{"tasks.arrival_rate": 0.0})
    sim = Simulator(cfg)
    for _ in range(3):
        rec = sim.run_slot()
        assert rec.slot_cost == 0.0
        assert rec.queues_after.total() == 0
        assert rec.drift == 0.0 and rec.bound_ok


@pytest.mark.parametrize("method", ["drl_perception", "perception_free", "sim_annealing", "complete_offload", "random"])
def test_every_method_runs_feasible_and_conserves(method):
    cfg = _small(method=method)
    records, summary = run_experiment(cfg)
    assert len(records) == cfg.slots
    assert summary["bound_violations"] == 0
    assert summary["conservation"]["ok"]
    assert all(1 <= r.inner_iters <= cfg.inner_iters for r in records)


def test_single_inner_iteration():
    records, summary = run_experiment(_small(inner_iters=1))
    assert all(r.inner_iters == 1 for r in records)
    assert summary["mean_inner_iters"] == 1.0


def test_same_seed_identical_streams():
    cfg = _small(**{"seed": 3})
    a, sa = run_experiment(cfg)
    b, sb = run_experiment(cfg)
    for r, s in zip(a, b):
        assert r.slot_cost == s.slot_cost
        assert (r.queues_after.uav == s.queues_after.uav).all()
        assert (r.decision.f_bs == s.decision.f_bs).all()
    assert sa == sb
    c, _ = run_experiment(cfg.with_overrides(seed=4))
    assert any(r.slot_cost != s.slot_cost for r, s in zip(a, c))


def test_one_slot_summary():
    records, summary = run_experiment(_small(slots=1))
    r = records[0]
    assert summary["time_avg_cost"] == r.slot_cost
    assert summary["time_avg_H_u"] == float(np.mean(r.queues_after.uav))
    assert summary["time_avg_H_bs"] == float(np.mean(r.queues_after.bs))


def test_summary_recomputable_from_records():
    records, summary = run_experiment(_small(slots=20))
    offline = np.mean([sum(c.collect + c.local + c.bs + c.sat + c.direct_sat for c in r.costs) for r in records])
    assert summary["time_avg_cost"] == pytest.approx(offline, rel=1e-12)
    s = summarize(records)
    n = np.arange(1, 21)
    assert np.allclose(s["avg_cost"] * n, np.cumsum(s["cost"]))
    assert (s["avg_H_u"] >= 0).all() and len(s["avg_H_bs"]) == 20
    assert s["avg_cost"][9] == pytest.approx(np.mean(s["cost"][:10]))


def test_conservation_audit_detects_tampering():
    records, _ = run_experiment(_small(slots=10))
    assert conservation_audit(records)["ok"]
    records[4].decision.extras["realized"][0, 0] += 1
    rep = conservation_audit(records)
    assert not rep["ok"] and rep["error"] == -1


def test_decision_log_audit(tmp_path):
    records, _ = run_experiment(_small(slots=8))
    write_decisions(tmp_path / "d.jsonl", records)
    write_records_csv(tmp_path / "r.csv", records, 0)
    cfg = _small()
    rep = audit_decisions(cfg, tmp_path / "d.jsonl", tmp_path / "r.csv")
    assert rep["ok"] and rep["slots"] == 8
    lines = (tmp_path / "d.jsonl").read_text().splitlines()
    row = json.loads(lines[3])
    row["H_uav_next"][0] += 1
    lines[3] = json.dumps(row)
    (tmp_path / "d.jsonl").write_text("\n".join(lines) + "\n")
    assert not audit_decisions(cfg, tmp_path / "d.jsonl")["ok"]


def test_agents_only_for_learning_methods():
    cfg = _small()
    assert make_agents(cfg, "random").ddpg is None
    assert make_agents(cfg, "complete_offload").ddpg is None
    assert make_agents(cfg, "complete_offload").dqn is not None
    assert make_agents(cfg, "sim_annealing").ddpg is not None


def test_hand_traced_micro_scenario(monkeypatch):
    """One UAV hovering over one pedestrian, no BS, fixed channels, noise-free radar."""
    cfg = from_dict({}).with_overrides(**{
        "method": "complete_offload", "warmup_slots": 0, "inner_iters": 1,
        "topology.num_uavs": 1, "topology.num_bs": 0, "topology.bs_positions": [],
        "topology.num_devices": 1, "topology.uav_radius": 1.0, "topology.device_region_radius": 1e-6,
        "topology.type_speeds": [1.5, 1.5, 1.5], "topology.p_turn": 0.0, "topology.uav_speed": 0.0,
        "radar.freq_noise_sigma": 0.0, "radar.phase_noise_sigma": 0.0, "radar.classifier_accuracy": 1.0,
        "compute.sat_cpu": 2e9})
    D = 80_000_000
    monkeypatch.setattr(orch, "sample_arrivals", lambda devices, rng, size, cap: np.array([D], dtype=np.int64))
    ch = Channels(np.zeros((1, 0)), np.array([1e7]), np.array([[1e9]]), np.array([1e7]))
    monkeypatch.setattr(Simulator, "_channels", lambda self, topo: ch)
    sim = Simulator(cfg)
    p_dev = dbm_to_watt(23.0)

    # slot 0: empty queues, the device's upload takes 0.08 s <= 0.1 s, so it is hosted
    r0 = sim.run_slot()
    assert r0.decision.hosting.tolist() == [[1]]
    assert r0.decision.extras["realized"].tolist() == [[0, 0, 0]]
    assert r0.queues_after.uav.tolist() == [D]
    assert r0.slot_cost == pytest.approx(p_dev * D / 1e9, rel=1e-12)
    assert r0.drift == pytest.approx(0.5 * 80.0 ** 2, rel=1e-12)

    # slot 1: H = 8e7.  Local at 3e8 Hz: -80 * 0.27 + kappa f^2 gamma H = -21.6 + 7.2.
    # Satellite (9e6 bits over 0.9 s at 1e7 bps): -80 * 9 + p * 0.9 + kappa share^2 gamma 9e6 = -720 + 36.003.
    r1 = sim.run_slot()
    assert r1.decision.extras["realized"].tolist() == [[0, 0, 9_000_000]]
    assert r1.decision.split.tolist() == [[0.0, 0.0, float(D)]]
    assert r1.decision.f_u[0] == 0.0
    assert r1.queues_after.uav.tolist() == [2 * D - 9_000_000]
    sat = dbm_to_watt(5.0) * 9e6 / 1e7 + 1e-9 * 9e6 * 1000
    assert r1.slot_cost == pytest.approx(p_dev * D / 1e9 + sat, rel=1e-12)
    H0, H1 = D / 1e6, (2 * D - 9_000_000) / 1e6
    assert r1.drift == pytest.approx(0.5 * (H1 ** 2 - H0 ** 2), rel=1e-12)
    assert r1.bound_ok and r1.bound_rhs >= r1.dpp
