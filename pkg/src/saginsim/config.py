"""Experiment configuration: nested dataclasses, YAML loading and validation.

Every default below is the shipped scenario, so an empty config file resolves
to the full five-UAV / two-BS / ten-device setup.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

import yaml

METHODS = ("drl_perception", "random", "complete_offload", "perception_free", "sim_annealing")


class ConfigError(ValueError):
    """Raised for unknown keys, bad values or unreadable config files."""


def dbm_to_watt(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


@dataclass(frozen=True)
class TopologyConfig:
    num_uavs: int = 5
    num_bs: int = 2
    num_devices: int = 10
    # both BSs sit under the UAV orbit so they are regularly in coverage
    bs_positions: tuple = ((1000.0, 1000.0, 0.0), (1000.0, -1000.0, 0.0))
    satellite_pos: tuple = (1000.0, 0.0, 780_000.0)
    uav_center: tuple = (1000.0, 0.0, 100.0)
    uav_radius: float = 1000.0
    uav_speed: float = 16.67
    coverage_radius: float = 500.0
    # devices are dropped uniformly in a disc around the trajectory centre
    device_region_radius: float = 1500.0
    p_turn: float = 0.2
    type_speeds: tuple = (1.5, 5.0, 15.0)
    type_probs: tuple = (1 / 3, 1 / 3, 1 / 3)


@dataclass(frozen=True)
class ComputeConfig:
    uav_cpu_max: float = 3e8
    bs_cpu_max: float = 5e9
    sat_cpu: float = 10e9
    cycles_per_bit: float = 1000.0
    kappa: float = 1e-27
    w_cyc: float = 1e-9


@dataclass(frozen=True)
class TaskConfig:
    slot_len: float = 1.0
    delta: float = 0.1
    task_size: int = 80_000_000
    arrival_rate: float = 0.5
    max_tasks_per_slot: int = 4
    v_bar: float = 10.0


@dataclass(frozen=True)
class RadioConfig:
    carrier_freq: float = 4e9
    bandwidth_ag: float = 4e8
    bandwidth_ka: float = 4e8
    noise_dbm_hz: float = -174.0
    rician_k: float = 7.0
    antenna_gain_dbi: float = 43.3
    p_uav_bs_dbm: float = 1.6
    p_uav_sat_dbm: float = 5.0
    p_dev_sat_dbm: float = 5.0
    p_dev_uav_dbm: float = 23.0
    pathloss_exp_ag: float = 2.7
    pathloss_exp_du: float = 2.0
    shadow_fading: float = 1.0
    pathloss_exp_los: float = 2.0
    pathloss_exp_nlos: float = 3.0
    ka_carrier: float = 30e9


@dataclass(frozen=True)
class RadarSection:
    center_freq: float = 77e9
    sweep_bandwidth: float = 4e9
    sweep_time: float = 4e-5
    chirp_interval: float = 1e-4
    tx_amplitude: float = 1.0
    sample_rate: float = 1e9
    freq_noise_sigma: float = 1e4
    phase_noise_sigma: float = 0.01
    classifier_accuracy: float = 0.9


@dataclass(frozen=True)
class SghsSection:
    hms: int = 30
    ni: int = 10000
    online_ni: int = 500
    bw_min: float = 5e-4
    bw_max: float = 0.5
    mu_hmcr: float = 0.95
    sigma_hmcr: float = 0.01
    mu_par: float = 0.3
    sigma_par: float = 0.05
    batch: int = 20
    symmetric: bool = False


@dataclass(frozen=True)
class SaSection:
    initial_temp: float = 1.0
    cooling_rate: float = 0.95
    iters: int = 1000
    step_sigma: float = 0.1


@dataclass(frozen=True)
class AgentSection:
    hidden: int = 64
    lr: float = 1e-3
    discount: float = 0.99
    soft_tau: float = 0.005
    buffer_size: int = 10000
    batch_size: int = 64
    train_start: int = 256
    explore_sigma: float = 0.3
    logit_l2: float = 0.0
    eps_start: float = 1.0
    eps_end: float = 0.05
    eps_steps: int = 5000
    target_sync: int = 100
    updates_per_slot: int = 1
    # DQN rewards pass through sign(r) log1p(|r| / floor); 0 keeps running-std scaling
    dqn_reward_floor: float = 1e-12


@dataclass(frozen=True)
class ExperimentConfig:
    method: str = "drl_perception"
    slots: int = 200
    seed: int = 0
    v_weight: float = 1.0
    inner_iters: int = 10
    warmup_slots: int = 300
    # bits per queue unit inside the Lyapunov function (1e6 -> Mbit)
    queue_unit: float = 1e6
    topology: TopologyConfig = field(default_factory=TopologyConfig)
    compute: ComputeConfig = field(default_factory=ComputeConfig)
    tasks: TaskConfig = field(default_factory=TaskConfig)
    radio: RadioConfig = field(default_factory=RadioConfig)
    radar: RadarSection = field(default_factory=RadarSection)
    sghs: SghsSection = field(default_factory=SghsSection)
    sa: SaSection = field(default_factory=SaSection)
    agents: AgentSection = field(default_factory=AgentSection)

    @property
    def tau_eff(self) -> float:
        """Phase-2 processing window tau - Delta."""
        return self.tasks.slot_len - self.tasks.delta

    def with_overrides(self, **kw) -> "ExperimentConfig":
        return from_dict(merge(to_dict(self), unflatten(kw)))


_POSITIVE = {
    "slots", "inner_iters", "queue_unit",
    "topology.num_uavs", "topology.uav_radius", "topology.coverage_radius",
    "topology.device_region_radius",
    "compute.uav_cpu_max", "compute.bs_cpu_max", "compute.sat_cpu", "compute.cycles_per_bit",
    "tasks.slot_len", "tasks.delta", "tasks.task_size", "tasks.max_tasks_per_slot",
    "radio.carrier_freq", "radio.bandwidth_ag", "radio.bandwidth_ka", "radio.ka_carrier",
    "radio.pathloss_exp_ag", "radio.pathloss_exp_du", "radio.pathloss_exp_los", "radio.pathloss_exp_nlos",
    "radar.center_freq", "radar.sweep_bandwidth", "radar.sweep_time", "radar.chirp_interval",
    "radar.sample_rate",
    "sghs.hms", "sghs.ni", "sghs.online_ni", "sghs.bw_min", "sghs.bw_max", "sghs.batch",
    "sa.initial_temp", "sa.iters", "sa.step_sigma",
    "agents.hidden", "agents.lr", "agents.buffer_size", "agents.batch_size", "agents.target_sync",
    "agents.updates_per_slot",
}
_NONNEG = {
    "v_weight", "warmup_slots", "topology.num_bs", "topology.num_devices", "topology.uav_speed",
    "compute.kappa", "compute.w_cyc", "tasks.arrival_rate", "tasks.v_bar",
    "radio.shadow_fading", "radio.rician_k", "radar.freq_noise_sigma", "radar.phase_noise_sigma",
    "radar.tx_amplitude", "agents.explore_sigma", "agents.logit_l2", "agents.train_start", "agents.eps_steps",
    "agents.dqn_reward_floor",
}
_UNIT = {
    "topology.p_turn", "radar.classifier_accuracy", "agents.discount", "agents.soft_tau",
    "agents.eps_start", "agents.eps_end", "sghs.mu_hmcr", "sghs.mu_par", "sa.cooling_rate",
}


def to_dict(cfg) -> dict:
    return json.loads(json.dumps(dataclasses.asdict(cfg)))


def unflatten(kw: dict) -> dict:
    out: dict = {}
    for key, val in kw.items():
        node = out
        parts = key.split(".")
        for p in parts[:-1]:
            node = node.setdefault(p, {})
        node[parts[-1]] = val
    return out


def merge(base: dict, over: dict) -> dict:
    res = dict(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(res.get(k), dict):
            res[k] = merge(res[k], v)
        else:
            res[k] = v
    return res


def _tupleize(v):
    if isinstance(v, list):
        return tuple(_tupleize(x) for x in v)
    return v


def _build(cls, data: dict, prefix: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{prefix or '<root>'}: expected a mapping, got {type(data).__name__}")
    known = {f.name: f for f in fields(cls)}
    kwargs = {}
    for key, val in data.items():
        path = f"{prefix}{key}"
        if key not in known:
            raise ConfigError(f"{path}: unknown key")
        default = getattr(cls(), key)
        if dataclasses.is_dataclass(default):
            kwargs[key] = _build(type(default), val, path + ".")
            continue
        kwargs[key] = _coerce(path, default, val)
    return cls(**kwargs)


def _coerce(path: str, default: Any, val: Any):
    if isinstance(default, bool):
        if not isinstance(val, bool):
            raise ConfigError(f"{path}: expected a boolean")
        return val
    if isinstance(default, int):
        if isinstance(val, float) and val.is_integer():
            val = int(val)
        if not isinstance(val, int) or isinstance(val, bool):
            raise ConfigError(f"{path}: expected an integer")
        return val
    if isinstance(default, float):
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            raise ConfigError(f"{path}: expected a number")
        if not math.isfinite(val):
            raise ConfigError(f"{path}: must be finite")
        return float(val)
    if isinstance(default, tuple):
        return _tupleize(val)
    if isinstance(default, str):
        if not isinstance(val, str):
            raise ConfigError(f"{path}: expected a string")
        return val
    return val


def _lookup(cfg, dotted: str):
    node = cfg
    for p in dotted.split("."):
        node = getattr(node, p)
    return node


def validate(cfg: ExperimentConfig) -> ExperimentConfig:
    for key in _POSITIVE:
        if not _lookup(cfg, key) > 0:
            raise ConfigError(f"{key}: must be > 0")
    for key in _NONNEG:
        if not _lookup(cfg, key) >= 0:
            raise ConfigError(f"{key}: must be >= 0")
    for key in _UNIT:
        v = _lookup(cfg, key)
        if not 0.0 <= v <= 1.0:
            raise ConfigError(f"{key}: must lie in [0, 1]")
    if cfg.method not in METHODS:
        raise ConfigError(f"method: unknown method {cfg.method!r} (choose from {', '.join(METHODS)})")
    if cfg.tasks.delta >= cfg.tasks.slot_len:
        raise ConfigError("tasks.delta: must be smaller than tasks.slot_len")
    if cfg.sghs.bw_min > cfg.sghs.bw_max:
        raise ConfigError("sghs.bw_min: must not exceed sghs.bw_max")
    topo = cfg.topology
    if len(topo.bs_positions) != topo.num_bs:
        raise ConfigError("topology.bs_positions: length must equal topology.num_bs")
    if len(topo.type_speeds) != 3 or len(topo.type_probs) != 3:
        raise ConfigError("topology.type_speeds: three device types expected")
    if abs(sum(topo.type_probs) - 1.0) > 1e-9:
        raise ConfigError("topology.type_probs: must sum to 1")
    if any(s < 0 for s in topo.type_speeds):
        raise ConfigError("topology.type_speeds: speeds must be >= 0")
    for pos in (*topo.bs_positions, topo.satellite_pos, topo.uav_center):
        if len(pos) != 3 or pos[2] < 0:
            raise ConfigError("topology: positions must be (x, y, z) with z >= 0")
    return cfg


def from_dict(data: dict | None) -> ExperimentConfig:
    return validate(_build(ExperimentConfig, data or {}, ""))


def parse_config(path: str | Path | None) -> ExperimentConfig:
    """Load a YAML experiment file; missing keys take the shipped defaults."""
    if path is None:
        return from_dict({})
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"{p}: config file not found")
    try:
        data = yaml.safe_load(p.read_text()) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"{p}: invalid YAML ({exc})") from exc
    try:
        return from_dict(data)
    except ConfigError as exc:
        raise ConfigError(f"{p}: {exc}") from exc


def config_hash(cfg: ExperimentConfig) -> str:
    blob = json.dumps(to_dict(cfg), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def dump_config(cfg: ExperimentConfig) -> str:
    return yaml.safe_dump(to_dict(cfg), sort_keys=False)
