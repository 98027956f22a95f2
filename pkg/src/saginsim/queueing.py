"""Task arrivals, Phase-1 hosting, and the integer-bit queue transition laws.

All bit quantities are Python/NumPy integers so that flow accounting over a
whole run is exact.  Service capacities derived from CPU or link rates are
floored to whole bits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class FeasibilityError(ValueError):
    """A decision violates one of the per-slot constraints."""


def bits_floor(x: float) -> int:
    """Floor to whole bits, absorbing float noise just below an integer."""
    if x <= 0:
        return 0
    return int(math.floor(x * (1.0 + 1e-12)))


@dataclass(frozen=True)
class OffloadSplit:
    q_loc: float = 0
    q_bs: float = 0
    q_sat: float = 0

    @property
    def total(self):
        return self.q_loc + self.q_bs + self.q_sat

    def as_tuple(self):
        return (self.q_loc, self.q_bs, self.q_sat)


@dataclass
class NetworkQueues:
    uav: np.ndarray  # (M,) int64 bits
    bs: np.ndarray   # (M, N) int64 bits

    @classmethod
    def zeros(cls, M: int, N: int) -> "NetworkQueues":
        return cls(np.zeros(M, dtype=np.int64), np.zeros((M, N), dtype=np.int64))

    def copy(self) -> "NetworkQueues":
        return NetworkQueues(self.uav.copy(), self.bs.copy())

    def total(self) -> int:
        return int(self.uav.sum()) + int(self.bs.sum())


@dataclass
class SlotDecision:
    hosting: np.ndarray       # (K, M) 0/1
    association: np.ndarray   # (M, N) 0/1
    split: np.ndarray         # (M, 3) planned bits (loc, bs, sat)
    f_u: np.ndarray           # (M,) Hz
    f_bs: np.ndarray          # (M, N) Hz
    extras: dict = field(default_factory=dict)

    def copy(self) -> "SlotDecision":
        return SlotDecision(self.hosting.copy(), self.association.copy(), self.split.copy(),
                            self.f_u.copy(), self.f_bs.copy(), dict(self.extras))


def sample_arrivals(devices, rng: np.random.Generator, task_size: int = 80_000_000,
                    max_tasks: int | None = None) -> np.ndarray:
    """Compound-Poisson arrivals: whole tasks of ``task_size`` bits per device."""
    rates = np.array([d.arrival_rate for d in devices], dtype=float)
    counts = rng.poisson(rates) if len(rates) else np.zeros(0, dtype=np.int64)
    if max_tasks is not None:
        counts = np.minimum(counts, max_tasks)
    return counts.astype(np.int64) * np.int64(task_size)


def hosting_decision(report, D_k: float, delta: float, v_bar: float, check_speed: bool = True,
                     rate: float | None = None) -> int:
    """1 iff the upload finishes inside Phase 1 and the device is slow enough."""
    if delta <= 0:
        raise ValueError("delta must be > 0")
    if not report.valid:
        return 0
    r = report.link_rate_estimate if rate is None else rate
    if D_k > 0:
        if r <= 0:
            return 0
        latency = D_k / r
    else:
        latency = 0.0
    if latency > delta:
        return 0
    if check_speed and report.est_velocity > v_bar:
        return 0
    return 1


def hosted_load(x_row, D) -> int:
    x_row = np.asarray(x_row, dtype=np.int64)
    return int(np.dot(x_row, np.asarray(D, dtype=np.int64)))


def direct_satellite_load(x, D, device_cover) -> int:
    """Bits of covered devices that were not hosted and go straight to the satellite."""
    x = np.asarray(x)
    total = 0
    for m, ids in enumerate(device_cover):
        for k in ids:
            total += (1 - int(x[k, m])) * int(D[k])
    return total


def local_service(H: int, f_u: float, tau: float, delta: float, gamma: float) -> int:
    if f_u < 0:
        raise ValueError("f_u must be >= 0")
    return min(int(H), bits_floor(f_u * (tau - delta) / gamma))


def resolve_offload(H: int, planned: OffloadSplit, y_row, rate_bs: float, rate_sat: float,
                    tau: float, delta: float, f_u: float = 0.0, gamma: float = 1000.0) -> OffloadSplit:
    """Realise a planned split by capping local, then BS, then satellite against the residual."""
    H = int(H)
    win = tau - delta
    q_loc = min(bits_floor(planned.q_loc), local_service(H, f_u, tau, delta, gamma))
    r1 = max(H - q_loc, 0)
    gate = int(np.sum(y_row)) if y_row is not None else 0
    q_bs = gate * min(bits_floor(planned.q_bs), r1, bits_floor(win * rate_bs))
    r2 = max(r1 - q_bs, 0)
    q_sat = min(bits_floor(planned.q_sat), r2, bits_floor(win * rate_sat))
    return OffloadSplit(q_loc, q_bs, q_sat)


def advance_uav_queue(H: int, realized: OffloadSplit, D_new: int) -> int:
    H_next = max(int(H) - realized.q_loc, 0) - realized.q_bs - realized.q_sat + int(D_new)
    assert H_next >= 0, "negative UAV backlog: offload split exceeded the queue"
    return H_next


def bs_service(H_bs: int, f_bs: float, tau: float, delta: float, gamma: float) -> int:
    return min(int(H_bs), bits_floor((tau - delta) * f_bs / gamma))


def advance_bs_queue(H_bs: int, J_bs: int, y: int, q_bs: int) -> int:
    return max(int(H_bs) - int(J_bs), 0) + int(y) * int(q_bs)


def validate_decision(dec: SlotDecision, H_uav, bs_cover, f_u_max: float, f_bs_max, *,
                      realized=None, atol: float = 1e-6) -> None:
    """Raise FeasibilityError naming the first violated per-slot constraint."""
    x, y = dec.hosting, dec.association
    if not np.isin(x, (0, 1)).all():
        raise FeasibilityError("hosting must be binary")
    if (x.sum(axis=1) > 1).any():
        raise FeasibilityError("a device is hosted by more than one UAV")
    if not np.isin(y, (0, 1)).all():
        raise FeasibilityError("association must be binary")
    if (y.sum(axis=1) > 1).any():
        raise FeasibilityError("a UAV is associated with more than one BS")
    for m, allowed in enumerate(bs_cover):
        for n in np.flatnonzero(y[m]):
            if n not in allowed:
                raise FeasibilityError(f"UAV {m} associated with uncovered BS {n}")
    if (dec.f_u < -atol).any() or (dec.f_u > f_u_max * (1 + 1e-9) + atol).any():
        raise FeasibilityError("UAV CPU frequency outside [0, f_max]")
    if (dec.f_bs < -atol).any():
        raise FeasibilityError("negative BS CPU allocation")
    f_bs_max = np.broadcast_to(np.asarray(f_bs_max, float), (dec.f_bs.shape[1],))
    if (dec.f_bs.sum(axis=0) > f_bs_max * (1 + 1e-9) + atol).any():
        raise FeasibilityError("BS CPU allocations exceed capacity")
    if (dec.split < -atol).any():
        raise FeasibilityError("negative offload amount")
    H_uav = np.asarray(H_uav, dtype=float)
    if (dec.split.sum(axis=1) > H_uav * (1 + 1e-9) + 1.0).any():
        raise FeasibilityError("planned split exceeds UAV backlog")
    if realized is not None:
        for m, r in enumerate(realized):
            if r.total > int(H_uav[m]):
                raise FeasibilityError(f"realised split exceeds backlog at UAV {m}")
