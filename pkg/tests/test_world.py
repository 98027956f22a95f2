import math

import numpy as np
import pytest
from scipy import stats

from saginsim.config import from_dict
from saginsim.world import (DeviceState, DeviceType, Position, Topology, Trajectory, UavState,
                            build_topology, coverage_sets, distance, horizontal_distance,
                            initial_devices, step_device, uav_position)


def _dev(k=0, pos=(0.0, 0.0, 0.0), speed=1.5, heading=0.0):
    return DeviceState(k, Position(*pos), speed, heading, DeviceType.PEDESTRIAN, 0.5)


def _uav(m, x, y, r=500.0):
    return UavState(m, Position(x, y, 100.0), r, 3e8, 1000.0)


def _topo(devices, uavs, bss=()):
    return Topology(tuple(devices), tuple(uavs), tuple(bss), tuple(5e9 for _ in bss),
                    Position(1000.0, 0.0, 780_000.0))


# ---- distance ------------------------------------------------------------

def test_distance_examples():
    assert distance((1, 2, 3), (1, 2, 3)) == 0.0
    assert distance((0, 0, 0), (3, 4, 0)) == 5.0
    assert distance((0, 0, 0), (1, 1, 1)) == pytest.approx(1.7320508, abs=1e-7)


def test_horizontal_distance_ignores_altitude():
    assert horizontal_distance((0, 0, 100), (3, 4, 0)) == 5.0


# ---- mobility ------------------------------------------------------------

def test_zero_speed_is_fixed_point():
    rng = np.random.default_rng(0)
    d = _dev(speed=0.0, heading=2.0, pos=(5.0, -3.0, 0.0))
    for _ in range(20):
        d = step_device(d, 1.0, rng)
        assert (d.pos.x, d.pos.y) == (5.0, -3.0)


def test_axis_aligned_step_exact():
    d = step_device(_dev(speed=1.5, heading=0.0), 1.0, np.random.default_rng(1), p_turn=0.0)
    assert d.pos.x == 1.5
    assert d.pos.y == 0.0
    assert d.heading == 0.0


def test_always_turn_displacement_isotropic():
    # with p_turn=1 each step uses the previous fresh heading, so steps are iid uniform
    rng = np.random.default_rng(2)
    d = _dev(speed=1.0, heading=0.0)
    headings, dx, dy = [], [], []
    for _ in range(10_000):
        nxt = step_device(d, 1.0, rng, p_turn=1.0)
        dx.append(nxt.pos.x - d.pos.x)
        dy.append(nxt.pos.y - d.pos.y)
        headings.append(nxt.heading)
        d = nxt
    dx, dy = np.array(dx[1:]), np.array(dy[1:])
    # per-axis variance of cos/sin of a uniform angle is 1/2
    se = math.sqrt(0.5 / len(dx))
    assert abs(dx.mean()) < 3 * se
    assert abs(dy.mean()) < 3 * se
    counts, _ = np.histogram(headings, bins=8, range=(0.0, 2 * math.pi))
    assert stats.chisquare(counts).pvalue > 0.01


def test_invalid_device_fields_rejected():
    with pytest.raises(ValueError):
        _dev(speed=-1.0)
    with pytest.raises(ValueError):
        _dev(heading=2 * math.pi)


# ---- trajectory ----------------------------------------------------------

def test_uav_start_position():
    p = uav_position(0, 0, Trajectory())
    assert p == pytest.approx((2000.0, 0.0, 100.0))


def test_uav_periodicity():
    traj = Trajectory(speed=10 * math.pi, radius=1000.0)  # integral period of 200 slots
    period = traj.period_slots
    assert period == pytest.approx(200.0)
    for m in range(5):
        for t in (0, 7, 33):
            a, b = uav_position(m, t, traj), uav_position(m, t + int(round(period)), traj)
            assert distance(a, b) < 1e-6


def test_uav_spacing_72_degrees():
    traj = Trajectory()
    c = traj.center
    angles = sorted(math.atan2(p.y - c.y, p.x - c.x) % (2 * math.pi)
                    for p in (uav_position(m, 0, traj) for m in range(5)))
    gaps = np.diff(angles + [angles[0] + 2 * math.pi])
    assert gaps == pytest.approx([math.radians(72)] * 5, abs=1e-12)


def test_uav_on_circle_constant_altitude():
    traj = Trajectory()
    for m in range(5):
        for t in range(0, 400, 13):
            p = uav_position(m, t, traj)
            assert abs(horizontal_distance(p, traj.center) - traj.radius) < 1e-6
            assert p.z == traj.center.z


# ---- coverage ------------------------------------------------------------

def test_tie_goes_to_lower_index():
    topo = _topo([_dev(0, (0.0, 0.0, 0.0))], [_uav(0, -100.0, 0.0), _uav(1, 100.0, 0.0)])
    cov = coverage_sets(topo)
    assert cov.device_cover == ((0,), ())


def test_outside_every_footprint_uncovered():
    topo = _topo([_dev(0, (601.0, 0.0, 0.0))], [_uav(0, 100.0, 0.0), _uav(1, 1102.0, 0.0)])
    cov = coverage_sets(topo)
    assert cov.device_cover == ((), ())
    assert cov.owner(1).tolist() == [-1]


def test_random_topology_brute_force():
    cfg = from_dict({})
    rng = np.random.default_rng(3)
    devices = initial_devices(cfg, rng)
    for t in range(0, 300, 17):
        topo = build_topology(cfg, devices, t)
        cov = coverage_sets(topo)
        members = [k for ids in cov.device_cover for k in ids]
        assert len(members) == len(set(members)) <= len(devices)
        for d in topo.devices:
            dists = [horizontal_distance(d.pos, u.pos) for u in topo.uavs]
            inside = [m for m, h in enumerate(dists) if h <= topo.uavs[m].coverage_radius]
            if inside:
                want = min(inside, key=lambda m: (dists[m], m))
                assert d.id in cov.device_cover[want]
            else:
                assert d.id not in members
        for m, u in enumerate(topo.uavs):
            for n, b in enumerate(topo.bs_positions):
                assert (n in cov.bs_cover[m]) == (horizontal_distance(b, u.pos) <= u.coverage_radius)
