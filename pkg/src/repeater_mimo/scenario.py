"""Physical units, deployment geometry and large-scale fading.

Everything downstream of this module works in linear SI units (watts,
meters). dB/dBm conversions happen here and at configuration boundaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

DEFAULT_UE_POWER_W = 0.2
DEFAULT_NOISE_DENSITY_DBW_PER_HZ = -204.0
DEFAULT_NOISE_FIGURE_DB = 5.0
DEFAULT_BANDWIDTH_HZ = 100e6


def db_to_linear(x_db):
    if np.ndim(x_db):
        return 10.0 ** (np.asarray(x_db, dtype=float) / 10.0)
    return 10.0 ** (float(x_db) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(x)


def dbm_to_watt(x_dbm: float) -> float:
    return 10.0 ** ((x_dbm - 30.0) / 10.0)


def watt_to_dbm(x_w: float) -> float:
    return 10.0 * math.log10(x_w) + 30.0


def noise_variance(noise_density_dbw_per_hz: float, bandwidth_hz: float, noise_figure_db: float) -> float:
    """Thermal noise power in watts for a density, bandwidth and noise figure."""
    if not bandwidth_hz > 0:
        raise ValueError(f"bandwidth_hz must be positive, got {bandwidth_hz}")
    total_dbw = noise_density_dbw_per_hz + 10.0 * math.log10(bandwidth_hz) + noise_figure_db
    return 10.0 ** (total_dbw / 10.0)


def node_distance(a, b) -> float:
    return float(np.linalg.norm(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)))


@dataclass(frozen=True)
class SystemParams:
    """Scalar physical parameters of the uplink.

    ``alpha`` is the repeater amplitude gain (0 silences the repeater) and
    ``rho`` the third-order compression coefficient in 1/W.
    """

    num_bs_antennas: int = 64
    num_ues: int = 4
    ue_power: float = DEFAULT_UE_POWER_W
    repeater_noise_var: float = field(
        default_factory=lambda: noise_variance(
            DEFAULT_NOISE_DENSITY_DBW_PER_HZ, DEFAULT_BANDWIDTH_HZ, DEFAULT_NOISE_FIGURE_DB
        )
    )
    bs_noise_var: float = field(
        default_factory=lambda: noise_variance(
            DEFAULT_NOISE_DENSITY_DBW_PER_HZ, DEFAULT_BANDWIDTH_HZ, DEFAULT_NOISE_FIGURE_DB
        )
    )
    alpha: float = 0.0
    rho: float = 0.0

    def __post_init__(self):
        if int(self.num_bs_antennas) < 1 or int(self.num_ues) < 1:
            raise ValueError("num_bs_antennas and num_ues must be >= 1")
        if not self.ue_power > 0:
            raise ValueError(f"ue_power must be > 0, got {self.ue_power}")
        if not (self.repeater_noise_var > 0 and self.bs_noise_var > 0):
            raise ValueError("noise variances must be > 0")
        if not self.alpha >= 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if not self.rho <= 0:
            raise ValueError(f"rho must be <= 0, got {self.rho}")

    def at(self, alpha: float | None = None, rho: float | None = None) -> "SystemParams":
        """Copy with the operating point replaced."""
        return replace(
            self,
            alpha=self.alpha if alpha is None else float(alpha),
            rho=self.rho if rho is None else float(rho),
        )


@dataclass(frozen=True)
class Scenario:
    bs_position: tuple[float, float, float] = (0.0, 0.0, 25.0)
    repeater_position: tuple[float, float, float] = (200.0, 0.0, 15.0)
    ue_x_range: tuple[float, float] = (200.0, 300.0)
    ue_y_range: tuple[float, float] = (-50.0, 50.0)
    ue_height: float = 1.5
    pathloss_offset_db: float = -34.53
    pathloss_exponent_db_per_decade: float = 38.0

    def __post_init__(self):
        (x0, x1), (y0, y1) = self.ue_x_range, self.ue_y_range
        if not (x1 > x0 and y1 > y0):
            raise ValueError("ue region must have strictly positive area")
        heights = (self.bs_position[2], self.repeater_position[2], self.ue_height)
        if min(heights) < 0:
            raise ValueError("heights must be >= 0")

    def pathloss_db(self, d):
        return pathloss_db(d, self.pathloss_offset_db, self.pathloss_exponent_db_per_decade)

    def gain(self, d):
        """Linear large-scale power gain over distance ``d``."""
        return db_to_linear(self.pathloss_db(d))

    @classmethod
    def fig1(cls) -> "Scenario":
        return cls()

    @classmethod
    def near_repeater(cls) -> "Scenario":
        """Repeater 100 m from the BS with UEs in [100, 200] x [-50, 50]."""
        return cls(repeater_position=(100.0, 0.0, 15.0), ue_x_range=(100.0, 200.0))


def pathloss_db(d, offset_db: float = -34.53, exponent_db_per_decade: float = 38.0):
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise ValueError("pathloss distance must be > 0")
    out = offset_db - exponent_db_per_decade * np.log10(d)
    return float(out) if out.ndim == 0 else out
