"""Geometry and mobility: device random walks, circular UAV orbits, coverage sets."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import IntEnum
from typing import NamedTuple

import numpy as np

TWO_PI = 2.0 * math.pi


class Position(NamedTuple):
    x: float
    y: float
    z: float = 0.0


class DeviceType(IntEnum):
    PEDESTRIAN = 0
    CYCLIST = 1
    VEHICLE = 2


@dataclass(frozen=True)
class DeviceState:
    id: int
    pos: Position
    speed: float
    heading: float
    device_type: DeviceType
    arrival_rate: float

    def __post_init__(self):
        if self.speed < 0:
            raise ValueError("speed must be >= 0")
        if not 0.0 <= self.heading < TWO_PI:
            raise ValueError("heading must lie in [0, 2*pi)")
        if self.arrival_rate < 0:
            raise ValueError("arrival_rate must be >= 0")


@dataclass(frozen=True)
class UavState:
    id: int
    pos: Position
    coverage_radius: float
    cpu_max: float
    cycles_per_bit: float


@dataclass(frozen=True)
class Topology:
    devices: tuple
    uavs: tuple
    bs_positions: tuple
    bs_cpu_max: tuple
    satellite_pos: Position


@dataclass(frozen=True)
class CoverageSets:
    device_cover: tuple  # per UAV: sorted tuple of device ids
    bs_cover: tuple      # per UAV: sorted tuple of BS ids

    def owner(self, num_devices: int) -> np.ndarray:
        """UAV index serving each device, -1 when uncovered."""
        out = np.full(num_devices, -1, dtype=int)
        for m, ids in enumerate(self.device_cover):
            out[list(ids)] = m
        return out


@dataclass(frozen=True)
class Trajectory:
    center: Position = Position(1000.0, 0.0, 100.0)
    radius: float = 1000.0
    speed: float = 16.67
    num_uavs: int = 5
    slot_len: float = 1.0

    @property
    def period_slots(self) -> float:
        return TWO_PI * self.radius / (self.speed * self.slot_len)


def distance(a, b) -> float:
    return math.sqrt((a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2 + (a[2] - b[2]) ** 2)


def horizontal_distance(a, b) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def step_device(d: DeviceState, slot_len: float, rng: np.random.Generator,
                p_turn: float = 0.2) -> DeviceState:
    """Advance one slot along the heading, then maybe turn to a fresh uniform heading."""
    if slot_len <= 0:
        raise ValueError("slot_len must be > 0")
    step = d.speed * slot_len
    pos = Position(d.pos.x + step * math.cos(d.heading), d.pos.y + step * math.sin(d.heading), d.pos.z)
    # both draws always consumed so the stream stays aligned across devices
    turn, fresh = rng.random(), rng.random()
    heading = d.heading
    if turn < p_turn:
        heading = (fresh * TWO_PI) % TWO_PI
    return replace(d, pos=pos, heading=heading)


def uav_position(m: int, t: int, traj: Trajectory) -> Position:
    if traj.radius <= 0:
        raise ValueError("trajectory radius must be > 0")
    theta = TWO_PI * m / traj.num_uavs + traj.speed * t * traj.slot_len / traj.radius
    return Position(traj.center.x + traj.radius * math.cos(theta),
                    traj.center.y + traj.radius * math.sin(theta),
                    traj.center.z)


def coverage_sets(topo: Topology) -> CoverageSets:
    """Assign each device to its nearest covering UAV (ties -> lower index)."""
    M = len(topo.uavs)
    dev_sets: list[list[int]] = [[] for _ in range(M)]
    for d in topo.devices:
        best, best_dist = -1, math.inf
        for m, u in enumerate(topo.uavs):
            h = horizontal_distance(d.pos, u.pos)
            if h <= u.coverage_radius and h < best_dist:
                best, best_dist = m, h
        if best >= 0:
            dev_sets[best].append(d.id)
    bs_sets = []
    for u in topo.uavs:
        bs_sets.append(tuple(n for n, b in enumerate(topo.bs_positions)
                             if horizontal_distance(b, u.pos) <= u.coverage_radius))
    return CoverageSets(tuple(tuple(sorted(s)) for s in dev_sets), tuple(bs_sets))


def trajectory_from_config(cfg) -> Trajectory:
    topo = cfg.topology
    return Trajectory(Position(*topo.uav_center), topo.uav_radius, topo.uav_speed,
                      topo.num_uavs, cfg.tasks.slot_len)


def make_uavs(cfg, t: int) -> tuple:
    traj = trajectory_from_config(cfg)
    return tuple(UavState(m, uav_position(m, t, traj), cfg.topology.coverage_radius,
                          cfg.compute.uav_cpu_max, cfg.compute.cycles_per_bit)
                 for m in range(cfg.topology.num_uavs))


def initial_devices(cfg, rng: np.random.Generator) -> tuple:
    """Drop devices uniformly in a disc around the orbit centre."""
    topo = cfg.topology
    cx, cy, _ = topo.uav_center
    devices = []
    for k in range(topo.num_devices):
        r = topo.device_region_radius * math.sqrt(rng.random())
        phi = TWO_PI * rng.random()
        dtype = DeviceType(int(rng.choice(3, p=topo.type_probs)))
        heading = (TWO_PI * rng.random()) % TWO_PI
        devices.append(DeviceState(k, Position(cx + r * math.cos(phi), cy + r * math.sin(phi), 0.0),
                                   float(topo.type_speeds[dtype]), heading, dtype,
                                   cfg.tasks.arrival_rate))
    return tuple(devices)


def build_topology(cfg, devices: tuple, t: int) -> Topology:
    return Topology(devices, make_uavs(cfg, t),
                    tuple(Position(*p) for p in cfg.topology.bs_positions),
                    tuple(cfg.compute.bs_cpu_max for _ in cfg.topology.bs_positions),
                    Position(*cfg.topology.satellite_pos))
