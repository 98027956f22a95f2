"""Fading channels and Shannon rates for air-ground and air/ground-satellite links."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .config import db_to_linear, dbm_to_watt

SPEED_OF_LIGHT = 3e8


class LinkKind(Enum):
    AIR_GROUND = "air_ground"
    AIR_SATELLITE = "air_satellite"


@dataclass(frozen=True)
class LinkBudget:
    bandwidth: float
    tx_power: float
    antenna_gain: float = 1.0
    noise_psd: float = dbm_to_watt(-174.0)

    def __post_init__(self):
        if self.bandwidth <= 0:
            raise ValueError("bandwidth must be > 0")
        if self.tx_power < 0:
            raise ValueError("tx_power must be >= 0")
        if self.noise_psd <= 0:
            raise ValueError("noise_psd must be > 0")

    @property
    def noise_power(self) -> float:
        return self.noise_psd * self.bandwidth


@dataclass(frozen=True)
class FadingParams:
    carrier_freq: float = 4e9
    shadow_fading: float = 1.0
    pathloss_exp_ag: float = 2.7
    rician_k: float = 7.0
    pathloss_exp_los: float = 2.0
    pathloss_exp_nlos: float = 3.0
    wavelength_ka: float = 0.01


@dataclass(frozen=True)
class ChannelRealization:
    gain_power: float
    link_kind: LinkKind


def path_loss(d, fp: FadingParams):
    """Free-space loss at the carrier with an excess exponent beyond 1 m."""
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise ValueError("path_loss: distance must be > 0")
    fspl = (4.0 * math.pi * d * fp.carrier_freq / SPEED_OF_LIGHT) ** 2
    out = fspl * d ** (fp.pathloss_exp_ag - 2.0)
    return float(out) if out.ndim == 0 else out


def ag_mean_gain(d, fp: FadingParams):
    return fp.shadow_fading ** 2 / path_loss(d, fp)


def sample_ag_gain(d, fp: FadingParams, rng: np.random.Generator):
    """|h|^2 for Rayleigh block fading; vectorised over d."""
    d = np.asarray(d, dtype=float)
    eps = (rng.standard_normal(d.shape) + 1j * rng.standard_normal(d.shape)) / math.sqrt(2.0)
    h = eps * fp.shadow_fading * np.sqrt(1.0 / np.asarray(path_loss(d, fp)))
    return np.abs(h) ** 2


def sample_us_gain(d, fp: FadingParams, rng: np.random.Generator):
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise ValueError("us_channel_gain: distance must be > 0")
    F = fp.rician_k
    if math.isinf(F):
        w_los, w_nlos = 1.0, 0.0
    else:
        w_los, w_nlos = math.sqrt(F / (1.0 + F)), math.sqrt(1.0 / (1.0 + F))
    nlos = (rng.standard_normal(d.shape) + 1j * rng.standard_normal(d.shape)) / math.sqrt(2.0)
    los = np.sqrt(d ** (-fp.pathloss_exp_los)) * np.exp(-2j * math.pi * d / fp.wavelength_ka)
    h = w_los * los + w_nlos * np.sqrt(d ** (-fp.pathloss_exp_nlos)) * nlos
    return np.abs(h) ** 2


def us_mean_gain(d, fp: FadingParams):
    F = fp.rician_k
    if math.isinf(F):
        return np.asarray(d, float) ** (-fp.pathloss_exp_los)
    return (F * d ** (-fp.pathloss_exp_los) + d ** (-fp.pathloss_exp_nlos)) / (1.0 + F)


def ag_channel_gain(d: float, fp: FadingParams, rng: np.random.Generator) -> ChannelRealization:
    return ChannelRealization(float(sample_ag_gain(d, fp, rng)), LinkKind.AIR_GROUND)


def us_channel_gain(d: float, fp: FadingParams, rng: np.random.Generator) -> ChannelRealization:
    return ChannelRealization(float(sample_us_gain(d, fp, rng)), LinkKind.AIR_SATELLITE)


def shannon_rate(bandwidth, tx_power, gain_power, antenna_gain, noise_psd):
    snr = tx_power * antenna_gain * np.asarray(gain_power, float) / (noise_psd * bandwidth)
    out = bandwidth * np.log2(1.0 + snr)
    return float(out) if np.ndim(out) == 0 else out


def rate(lb: LinkBudget, ch: ChannelRealization) -> float:
    g = lb.antenna_gain if ch.link_kind is LinkKind.AIR_SATELLITE else 1.0
    return shannon_rate(lb.bandwidth, lb.tx_power, ch.gain_power, g, lb.noise_psd)


@dataclass(frozen=True)
class RadioModel:
    """All link budgets and fading parameters of one scenario, resolved to SI units."""

    ag: FadingParams
    du: FadingParams
    sat: FadingParams
    uav_bs: LinkBudget
    uav_sat: LinkBudget
    dev_sat: LinkBudget
    dev_uav: LinkBudget

    @classmethod
    def from_config(cls, cfg) -> "RadioModel":
        r = cfg.radio
        n0 = dbm_to_watt(r.noise_dbm_hz)
        g0 = db_to_linear(r.antenna_gain_dbi)
        lam = SPEED_OF_LIGHT / r.ka_carrier
        ag = FadingParams(r.carrier_freq, r.shadow_fading, r.pathloss_exp_ag, r.rician_k,
                          r.pathloss_exp_los, r.pathloss_exp_nlos, lam)
        du = FadingParams(r.carrier_freq, r.shadow_fading, r.pathloss_exp_du, r.rician_k,
                          r.pathloss_exp_los, r.pathloss_exp_nlos, lam)
        return cls(
            ag=ag, du=du, sat=ag,
            uav_bs=LinkBudget(r.bandwidth_ag, dbm_to_watt(r.p_uav_bs_dbm), 1.0, n0),
            uav_sat=LinkBudget(r.bandwidth_ka, dbm_to_watt(r.p_uav_sat_dbm), g0, n0),
            dev_sat=LinkBudget(r.bandwidth_ka, dbm_to_watt(r.p_dev_sat_dbm), g0, n0),
            dev_uav=LinkBudget(r.bandwidth_ag, dbm_to_watt(r.p_dev_uav_dbm), 1.0, n0),
        )

    def dev_uav_rate_at(self, d):
        """Rate predicted from distance alone (mean fading), used for hosting checks."""
        lb = self.dev_uav
        return shannon_rate(lb.bandwidth, lb.tx_power, ag_mean_gain(d, self.du), 1.0, lb.noise_psd)
