"""FMCW radar measurement model plus a parametric stand-in for the vision classifier."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import SPEED_OF_LIGHT
from .world import DeviceType, distance


class MeasurementInvalid(ValueError):
    """Angle estimate undefined: the arcsine argument left [-1, 1]."""


@dataclass(frozen=True)
class RadarConfig:
    center_freq: float = 77e9
    sweep_bandwidth: float = 4e9
    sweep_time: float = 4e-5
    chirp_interval: float = 1e-4
    tx_amplitude: float = 1.0
    sample_rate: float = 1e9
    freq_noise_sigma: float = 1e4
    phase_noise_sigma: float = 0.01

    def __post_init__(self):
        if self.sweep_bandwidth <= 0 or self.sweep_time <= 0:
            raise ValueError("sweep bandwidth and sweep time must be > 0")

    @property
    def slope(self) -> float:
        return self.sweep_bandwidth / self.sweep_time

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.center_freq

    @property
    def range_resolution(self) -> float:
        return SPEED_OF_LIGHT / (2.0 * self.sweep_bandwidth)

    def max_range(self) -> float:
        """Largest range whose beat frequency stays below Nyquist."""
        return self.sample_rate / 2.0 * SPEED_OF_LIGHT * self.sweep_time / (2.0 * self.sweep_bandwidth)

    @classmethod
    def from_config(cls, cfg) -> "RadarConfig":
        r = cfg.radar
        return cls(r.center_freq, r.sweep_bandwidth, r.sweep_time, r.chirp_interval,
                   r.tx_amplitude, r.sample_rate, r.freq_noise_sigma, r.phase_noise_sigma)


@dataclass(frozen=True)
class PerceptionReport:
    device_id: int
    est_distance: float
    est_velocity: float
    est_angle: float
    est_type: DeviceType
    link_rate_estimate: float
    valid: bool = True


def fmcw_if_frequency(true_distance: float, rc: RadarConfig, rng: np.random.Generator | None = None) -> float:
    if true_distance < 0:
        raise ValueError("distance must be >= 0")
    f = 2.0 * rc.sweep_bandwidth * true_distance / (SPEED_OF_LIGHT * rc.sweep_time)
    if rng is not None and rc.freq_noise_sigma > 0:
        f += rc.freq_noise_sigma * rng.standard_normal()
    return f


def estimate_distance(f_if: float, rc: RadarConfig) -> float:
    return SPEED_OF_LIGHT * rc.sweep_time * f_if / (2.0 * rc.sweep_bandwidth)


def estimate_velocity(phase_rate: float, rc: RadarConfig) -> float:
    return rc.wavelength * phase_rate / (4.0 * math.pi * rc.chirp_interval)


def estimate_angle(omega: float, d: float, rc: RadarConfig) -> float:
    arg = rc.wavelength * omega / (2.0 * math.pi * d) if d > 0 else math.inf
    if not -1.0 <= arg <= 1.0:
        raise MeasurementInvalid(f"arcsin argument {arg:.4g} outside [-1, 1]")
    return math.asin(arg)


def classify_device(true_type: DeviceType, accuracy: float, rng: np.random.Generator) -> DeviceType:
    if not 0.0 <= accuracy <= 1.0:
        raise ValueError("accuracy must lie in [0, 1]")
    hit, pick = rng.random(), rng.random()
    if hit < accuracy:
        return DeviceType(true_type)
    others = [t for t in DeviceType if t != true_type]
    return others[min(int(pick * len(others)), len(others) - 1)]


def synthesize_if_signal(true_distance: float, rc: RadarConfig, amplitude_rx: float = 1.0,
                         initial_phase: float = 0.0):
    """Sample one chirp of transmit and echo, mix them, and return (t, IF samples).

    The mixer is modelled as transmit times conjugate echo on the analytic
    signals, which keeps only the difference-frequency product that a
    low-pass filtered real mixer outputs.
    """
    n = int(round(rc.sweep_time * rc.sample_rate))
    t = np.arange(n) / rc.sample_rate
    tau0 = 2.0 * true_distance / SPEED_OF_LIGHT

    def phase(tt):
        return 2.0 * math.pi * (rc.center_freq * tt + rc.slope * tt ** 2 / 2.0) + initial_phase

    s_t = rc.tx_amplitude * np.exp(1j * phase(t))
    s_r = amplitude_rx * np.exp(1j * phase(t - tau0))
    s_r[t < tau0] = 0.0
    s_if = 0.5 * np.real(s_t * np.conj(s_r))
    return t, s_if


def fft_peak_frequency(samples: np.ndarray, sample_rate: float) -> tuple[float, float]:
    """Return (peak frequency, bin width) of a real signal's magnitude spectrum."""
    spec = np.abs(np.fft.rfft(samples * np.hanning(len(samples))))
    freqs = np.fft.rfftfreq(len(samples), 1.0 / sample_rate)
    spec[0] = 0.0
    return float(freqs[int(np.argmax(spec))]), float(sample_rate / len(samples))


def _true_angle(uav_pos, dev_pos) -> float:
    d = distance(uav_pos, dev_pos)
    return math.asin(max(-1.0, min(1.0, (dev_pos[0] - uav_pos[0]) / d))) if d > 0 else 0.0


def perceive(uav, covered, rc: RadarConfig, rng: np.random.Generator, radio, accuracy: float = 0.9):
    """One report per covered device: range, speed, angle, type and predicted uplink rate.

    ``covered`` is an iterable of DeviceState.  Radar Doppler and the vision
    track are fused into a ground-speed estimate, so the phase rate is
    synthesised from the device speed rather than its radial projection.
    """
    reports = []
    for dev in covered:
        d_true = distance(uav.pos, dev.pos)
        d_hat = max(estimate_distance(fmcw_if_frequency(d_true, rc, rng), rc), 0.0)
        omega_v = 4.0 * math.pi * rc.chirp_interval * dev.speed / rc.wavelength
        v_hat = estimate_velocity(omega_v + rc.phase_noise_sigma * rng.standard_normal(), rc)
        theta = _true_angle(uav.pos, dev.pos)
        omega_a = 2.0 * math.pi * d_true * math.sin(theta) / rc.wavelength
        omega_a += rc.phase_noise_sigma * rng.standard_normal()
        valid = True
        try:
            th_hat = estimate_angle(omega_a, d_hat, rc)
        except MeasurementInvalid:
            th_hat, valid = 0.0, False
        est_type = classify_device(dev.device_type, accuracy, rng)
        rate_hat = float(radio.dev_uav_rate_at(max(d_hat, 1.0)))
        reports.append(PerceptionReport(dev.id, d_hat, v_hat, th_hat, est_type, rate_hat, valid))
    return reports
