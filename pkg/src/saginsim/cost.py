"""Energy and server-usage cost components and the per-UAV operational cost."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import dbm_to_watt


class InfeasibleTransmission(ValueError):
    """Bits scheduled over a link whose rate is zero."""


@dataclass(frozen=True)
class EnergyParams:
    kappa: float = 1e-27
    device_tx_power: float = dbm_to_watt(23.0)
    dev_sat_power: float = dbm_to_watt(5.0)
    uav_bs_tx_power: float = dbm_to_watt(1.6)
    uav_sat_tx_power: float = dbm_to_watt(5.0)
    # cost units per CPU cycle of satellite usage
    w_cyc: float = 1e-9

    @classmethod
    def from_config(cls, cfg) -> "EnergyParams":
        r, c = cfg.radio, cfg.compute
        return cls(c.kappa, dbm_to_watt(r.p_dev_uav_dbm), dbm_to_watt(r.p_dev_sat_dbm),
                   dbm_to_watt(r.p_uav_bs_dbm), dbm_to_watt(r.p_uav_sat_dbm), c.w_cyc)


@dataclass(frozen=True)
class CostBreakdown:
    collect: float = 0.0
    local: float = 0.0
    bs: float = 0.0
    sat: float = 0.0
    direct_sat: float = 0.0
    total: float = 0.0


def _tx_energy(power: float, bits: float, rate: float) -> float:
    if bits <= 0:
        return 0.0
    if rate <= 0:
        raise InfeasibleTransmission("bits scheduled on a zero-rate link")
    return power * bits / rate


def local_cost(f_u: float, H: float, gamma: float, kappa: float = 1e-27) -> float:
    """kappa f^3 * (gamma H / f) = kappa f^2 gamma H; zero when the CPU is idle."""
    if f_u <= 0 or H <= 0:
        return 0.0
    return kappa * f_u ** 2 * gamma * float(H)


def bs_offload_cost(y, q_bs: float, rate, f_bs, H_bs, gamma: float, ep: EnergyParams) -> float:
    y = np.atleast_1d(np.asarray(y))
    rate = np.broadcast_to(np.asarray(rate, float), y.shape)
    f_bs = np.broadcast_to(np.asarray(f_bs, float), y.shape)
    H_bs = np.broadcast_to(np.asarray(H_bs, float), y.shape)
    e_tran = sum(_tx_energy(ep.uav_bs_tx_power, q_bs, rate[n]) for n in np.flatnonzero(y))
    e_cmp = float(np.sum(ep.kappa * y * f_bs ** 2 * gamma * H_bs))
    return e_tran + e_cmp


def sat_offload_cost(q_sat: float, rate_sat: float, gamma: float, ep: EnergyParams) -> float:
    return _tx_energy(ep.uav_sat_tx_power, q_sat, rate_sat) + ep.w_cyc * float(q_sat) * gamma


def sat_usage_cycles(q_sat: float, gamma: float) -> float:
    return float(q_sat) * gamma


def direct_sat_cost(D_k: float, rate_k_sat: float, gamma_k: float, ep: EnergyParams) -> float:
    return _tx_energy(ep.dev_sat_power, D_k, rate_k_sat) + ep.w_cyc * float(D_k) * gamma_k


def collection_cost(x_row, D, device_rates, device_tx: float) -> float:
    total = 0.0
    for x, d, r in zip(np.asarray(x_row), np.asarray(D), np.asarray(device_rates, float)):
        if x:
            total += _tx_energy(device_tx, float(d), r)
    return total


def total_uav_cost(collect: float, local: float, bs: float, sat: float, direct_sat: float) -> CostBreakdown:
    parts = (collect, local, bs, sat, direct_sat)
    if any(p < 0 for p in parts):
        raise ValueError("cost components must be nonnegative")
    return CostBreakdown(collect, local, bs, sat, direct_sat, collect + local + bs + sat + direct_sat)
