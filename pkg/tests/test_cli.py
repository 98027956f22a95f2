import csv
import json

import pytest
from click.testing import CliRunner

from saginsim.cli import main, monotone_report
from saginsim.config import ConfigError, config_hash, dump_config, from_dict, parse_config, to_dict

FAST = """
slots: 6
warmup_slots: 0
inner_iters: 2
sghs: {online_ni: 30}
sa: {iters: 40}
agents: {train_start: 8, batch_size: 8, hidden: 16}
"""


@pytest.fixture
def fast_cfg(tmp_path):
    p = tmp_path / "fast.yaml"
    p.write_text(FAST)
    return p


# ---- config parsing --------------------------------------------------------

def test_empty_file_gives_defaults(tmp_path):
    p = tmp_path / "empty.yaml"
    p.write_text("")
    cfg = parse_config(p)
    assert cfg == from_dict({})
    assert cfg.topology.satellite_pos[2] == 780_000.0
    assert cfg.compute.uav_cpu_max == 3e8
    assert cfg.compute.bs_cpu_max == 5e9
    assert cfg.compute.sat_cpu == 10e9
    assert (cfg.radio.p_uav_sat_dbm, cfg.radio.p_uav_bs_dbm, cfg.radio.p_dev_sat_dbm) == (5.0, 1.6, 5.0)


def test_override_only_changes_v():
    base = to_dict(from_dict({}))
    over = to_dict(from_dict({"v_weight": 10}))
    diff = [k for k in base if base[k] != over[k]]
    assert diff == ["v_weight"] and over["v_weight"] == 10.0


@pytest.mark.parametrize("body, key", [
    ("radio: {bandwidth_ag: -4.0e8}", "radio.bandwidth_ag"),
    ("tasks: {bogus: 1}", "tasks.bogus"),
    ("topology: {p_turn: 1.5}", "topology.p_turn"),
    ("method: nonsense", "method"),
])
def test_config_errors_name_file_and_key(tmp_path, body, key):
    p = tmp_path / "bad.yaml"
    p.write_text(body)
    with pytest.raises(ConfigError) as err:
        parse_config(p)
    assert str(p) in str(err.value) and key in str(err.value)


def test_missing_file_rejected(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        parse_config(tmp_path / "nope.yaml")


def test_config_hash_stable_under_reparse(tmp_path):
    cfg = from_dict({"v_weight": 3.0, "topology": {"num_devices": 7}})
    p = tmp_path / "c.yaml"
    p.write_text(dump_config(cfg))
    assert config_hash(parse_config(p)) == config_hash(cfg)


# ---- run ----------------------------------------------------------------------

def test_run_writes_outputs_and_is_reproducible(tmp_path, fast_cfg):
    r = CliRunner()
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        res = r.invoke(main, ["run", "--config", str(fast_cfg), "--seed", "42", "--out", str(out)])
        assert res.exit_code == 0, res.output
        outs.append(out)
    for suffix in (".csv", ".decisions.jsonl", ".summary.json"):
        a = (outs[0] / f"drl_perception_s42{suffix}").read_bytes()
        assert a == (outs[1] / f"drl_perception_s42{suffix}").read_bytes()
    man = json.loads((outs[0] / "manifest.json").read_text())
    assert man["seeds"] == [42] and man["config_hash"] == config_hash(parse_config(fast_cfg))
    rows = list(csv.DictReader(open(outs[0] / "drl_perception_s42.csv")))
    assert len(rows) == 6 and {"t", "method", "cost_total", "H_u_mean", "drift", "bound_rhs"} <= set(rows[0])


def test_run_refuses_overwrite_without_force(tmp_path, fast_cfg):
    r = CliRunner()
    args = ["run", "--config", str(fast_cfg), "--out", str(tmp_path / "o"), "--method", "random"]
    assert r.invoke(main, args).exit_code == 0
    res = r.invoke(main, args)
    assert res.exit_code != 0 and "--force" in res.output
    assert r.invoke(main, args + ["--force"]).exit_code == 0


def test_unknown_method_is_usage_error(tmp_path):
    res = CliRunner().invoke(main, ["run", "--method", "teleport", "--out", str(tmp_path)])
    assert res.exit_code == 2 and "unknown method" in res.output


def test_bad_config_is_usage_error(tmp_path):
    p = tmp_path / "bad.yaml"
    p.write_text("radio: {bandwidth_ag: -1.0}")
    res = CliRunner().invoke(main, ["run", "--config", str(p), "--out", str(tmp_path / "o")])
    assert res.exit_code == 2 and "radio.bandwidth_ag" in res.output


def test_v_weight_flag_and_set(tmp_path, fast_cfg):
    out = tmp_path / "o"
    res = CliRunner().invoke(main, ["run", "--config", str(fast_cfg), "--v-weight", "10", "--set",
                                    "tasks.arrival_rate=0.2", "--method", "complete_offload", "--out", str(out)])
    assert res.exit_code == 0, res.output
    s = json.loads((out / "complete_offload_s0.summary.json").read_text())
    assert s["v_weight"] == 10.0
    assert parse_config(out / "config.yaml").tasks.arrival_rate == 0.2


# ---- sweep and audit -------------------------------------------------------

def test_sweep_datasize(tmp_path, fast_cfg):
    out = tmp_path / "sw"
    res = CliRunner().invoke(main, ["sweep", "--param", "datasize", "--config", str(fast_cfg),
                                    "--method", "complete_offload", "--out", str(out)])
    assert res.exit_code == 0, res.output
    assert len(list(out.glob("complete_offload_datasize*_s0.csv"))) == 3
    report = (out / "trend_report.txt").read_text()
    assert "complete_offload" in report and "datasize" in report
    trend = list(csv.DictReader(open(out / "trend.csv")))
    assert [float(r["value"]) for r in trend] == [5.0, 10.0, 20.0]


def test_monotone_report_majority():
    vals, seeds = (1, 2, 3), (0, 1, 2)
    costs = {0: (1, 2, 3), 1: (1, 3, 2), 2: (2, 2, 5)}
    summ = {("m", v, s): {"time_avg_cost": costs[s][i]} for i, v in enumerate(vals) for s in seeds}
    assert monotone_report(vals, ("m",), seeds, summ) == [("m", 2, 3, True)]


def test_audit_subcommand(tmp_path, fast_cfg):
    out = tmp_path / "o"
    r = CliRunner()
    assert r.invoke(main, ["run", "--config", str(fast_cfg), "--method", "sim_annealing", "--out", str(out)]).exit_code == 0
    res = r.invoke(main, ["audit", str(out)])
    assert res.exit_code == 0 and "sim_annealing_s0: ok" in res.output
    log = out / "sim_annealing_s0.decisions.jsonl"
    lines = log.read_text().splitlines()
    row = json.loads(lines[2])
    row["costs"][0] += 1.0
    lines[2] = json.dumps(row)
    log.write_text("\n".join(lines) + "\n")
    res = r.invoke(main, ["audit", str(out)])
    assert res.exit_code == 1 and "FAILED" in res.output


# ---- benchmarks and report ----------------------------------------------------

def test_bench_radar(tmp_path):
    res = CliRunner().invoke(main, ["bench-radar", "--points", "5", "--out", str(tmp_path / "r.csv")])
    assert res.exit_code == 0, res.output
    rows = list(csv.DictReader(open(tmp_path / "r.csv")))
    assert len(rows) == 5 and all(r["bin_ok"] == "True" and r["range_ok"] == "True" for r in rows)


def test_bench_sghs(tmp_path):
    res = CliRunner().invoke(main, ["bench-sghs", "--instances", "3", "--ni", "200", "--out", str(tmp_path)])
    assert res.exit_code == 0, res.output
    assert "instances" in res.output
    assert (tmp_path / "sghs_bench.csv").is_file() and (tmp_path / "sghs_trace.csv").is_file()


def test_report_renders_pngs(tmp_path, fast_cfg):
    out = tmp_path / "o"
    r = CliRunner()
    assert r.invoke(main, ["run", "--config", str(fast_cfg), "--method", "random", "--out", str(out)]).exit_code == 0
    res = r.invoke(main, ["report", str(out)])
    assert res.exit_code == 0, res.output
    assert list(out.glob("*.png"))
