"""Link budgets: optical ISL capacity, radio GSL capacity, and delays."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

BOLTZMANN = 1.380649e-23  # J/K
SPEED_OF_LIGHT = 2.99792458e8  # m/s
COSMIC_BACKGROUND_K = 2.7

DEFAULT_ATMOS_TABLE = ((90.0, 0.5), (60.0, 0.6), (40.0, 0.8), (25.0, 1.2), (10.0, 3.0))


@dataclass(frozen=True)
class ChannelParams:
    # optical inter-satellite links
    B_ISL: float = 5e9
    P_tx: float = 0.1
    L_pointing: float = 0.9
    aperture_diameter_m: float = 0.10
    beam_divergence_rad: float = 1.744e-5
    T_noise_K: float = 290.0
    lambda_upload: float = 0.08
    # ground-satellite links
    B_GSL: float = 250e6
    EIRP_dBW: float = 34.6
    G_rx_dB: float = 10.8
    f_c_Hz: float = 19e9
    T_mr_K: float = 275.0
    # constants
    boltzmann: float = BOLTZMANN
    c_mps: float = SPEED_OF_LIGHT
    # ground station to internet
    fiber_capacity_bps: float = 50e9
    fiber_delay_range_s: tuple[float, float] = (1e-3, 5e-3)
    fiber_delay_noise_std_s: float = 0.2e-3
    atmos_table: tuple[tuple[float, float], ...] = field(default=DEFAULT_ATMOS_TABLE)

    def __post_init__(self):
        positive = ("B_ISL", "P_tx", "aperture_diameter_m", "beam_divergence_rad", "T_noise_K",
                    "B_GSL", "f_c_Hz", "T_mr_K", "boltzmann", "c_mps", "fiber_capacity_bps")
        for name in positive:
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.L_pointing <= 1:
            raise ValueError("L_pointing must lie in (0, 1]")
        if not 0 <= self.lambda_upload <= 1:
            raise ValueError("lambda_upload must lie in [0, 1]")
        lo, hi = self.fiber_delay_range_s
        if lo < 0 or lo > hi:
            raise ValueError("fiber_delay_range_s must satisfy 0 <= lo <= hi")
        if self.fiber_delay_noise_std_s < 0:
            raise ValueError("fiber_delay_noise_std_s must be non-negative")
        table = tuple(sorted(((float(e), float(a)) for e, a in self.atmos_table), reverse=True))
        if not table:
            raise ValueError("atmos_table is empty")
        for (e_hi, a_hi), (e_lo, a_lo) in zip(table, table[1:]):
            if e_hi == e_lo:
                raise ValueError(f"duplicate elevation {e_hi} in atmos_table")
            if a_lo < a_hi:
                raise ValueError("atmospheric attenuation must not decrease toward low elevation")
        object.__setattr__(self, "atmos_table", table)


def isl_received_power(d_m, p: ChannelParams):
    return p.P_tx * p.L_pointing * (0.5 * p.aperture_diameter_m) ** 2 / (np.asarray(d_m) * p.beam_divergence_rad) ** 2


def isl_noise_power(p: ChannelParams) -> float:
    return p.boltzmann * p.T_noise_K * p.B_ISL


def isl_capacity(d_m, p: ChannelParams):
    """Upload share of the Shannon capacity (bit/s) of an optical ISL of length ``d_m``."""
    d = np.asarray(d_m, dtype=float)
    if np.any(d <= 0):
        raise ValueError("ISL distance must be positive")
    snr = isl_received_power(d, p) / isl_noise_power(p)
    c = p.lambda_upload * p.B_ISL * np.log2(1.0 + snr)
    return float(c) if c.ndim == 0 else c


def atmospheric_attenuation(elevation_deg, p: ChannelParams):
    """Attenuation in dB, linearly interpolated in the elevation table.

    Outside the table the nearest entry is held constant.
    """
    el = np.asarray(elevation_deg, dtype=float)
    if np.any(el <= 0) or np.any(el > 90):
        raise ValueError("elevation must lie in (0, 90] degrees")
    xs = np.array([e for e, _ in reversed(p.atmos_table)])
    ys = np.array([a for _, a in reversed(p.atmos_table)])
    a = np.interp(el, xs, ys)
    return float(a) if a.ndim == 0 else a


def free_space_path_loss_db(d_m, p: ChannelParams):
    return 20.0 * np.log10(4.0 * math.pi * np.asarray(d_m, dtype=float) * p.f_c_Hz / p.c_mps)


def sky_temperature(atten_db, p: ChannelParams):
    frac = 10.0 ** (-np.asarray(atten_db, dtype=float) / 10.0)
    return p.T_mr_K * (1.0 - frac) + COSMIC_BACKGROUND_K * frac


def gsl_capacity_from_attenuation(d_m, atten_db, p: ChannelParams):
    d = np.asarray(d_m, dtype=float)
    if np.any(d <= 0):
        raise ValueError("GSL distance must be positive")
    p_rx = 10.0 ** ((p.EIRP_dBW - free_space_path_loss_db(d, p) + p.G_rx_dB - atten_db) / 10.0)
    p_noise = p.boltzmann * sky_temperature(atten_db, p) * p.B_GSL
    c = p.B_GSL * np.log2(1.0 + p_rx / p_noise)
    return float(c) if np.ndim(c) == 0 else c


def gsl_capacity(d_m, elevation_deg, p: ChannelParams):
    """Shannon capacity (bit/s) of a satellite-to-ground radio link; no upload scaling."""
    return gsl_capacity_from_attenuation(d_m, atmospheric_attenuation(elevation_deg, p), p)


def propagation_delay(d_m, p: ChannelParams | None = None):
    c = SPEED_OF_LIGHT if p is None else p.c_mps
    if np.any(np.asarray(d_m) < 0):
        raise ValueError("distance must be non-negative")
    return np.asarray(d_m, dtype=float) / c if np.ndim(d_m) else float(d_m) / c


class FiberDelayModel:
    """Per-station fiber delay: a uniform base drawn once, plus per-slot Gaussian jitter."""

    def __init__(self, num_stations: int, rng: np.random.Generator, p: ChannelParams):
        lo, hi = p.fiber_delay_range_s
        self.base_s = rng.uniform(lo, hi, size=num_stations)
        self._std = p.fiber_delay_noise_std_s
        self._rng = rng

    def sample(self) -> np.ndarray:
        if self._std == 0:
            return self.base_s.copy()
        noise = self._rng.normal(0.0, self._std, size=self.base_s.shape)
        return np.maximum(self.base_s + noise, 0.0)


def fiber_delay(rng: np.random.Generator, p: ChannelParams, num_slots: int = 1) -> np.ndarray:
    """Delay sequence (seconds) of a single fiber link over ``num_slots`` slots."""
    model = FiberDelayModel(1, rng, p)
    return np.array([model.sample()[0] for _ in range(num_slots)])
