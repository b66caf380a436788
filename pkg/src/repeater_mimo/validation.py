"""Closed form vs Monte-Carlo checks backing the ``validate`` subcommand."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from . import oracle
from .bussgang import (
    bussgang_gain,
    bussgang_gain_expanded,
    distortion_covariance,
    min_eig_threshold,
    received_covariance,
    received_covariance_expanded,
    repeater_input_power,
    third_order_cross_moment,
    third_order_cross_moment_expanded,
)
from .channel import ChannelRealization
from .scenario import SystemParams

# Relative tolerances for the Monte-Carlo comparisons.
TOL_BUSSGANG = 0.02
TOL_RECEIVED_COV = 0.03
TOL_MOMENTS = (0.01, 0.02, 0.05)
TOL_CROSS_THIRD = 0.02
UNCORRELATED_SIGMAS = 3.0
CLOSED_FORM_TOL = 1e-12

DEFAULT_SAMPLES_B = 10**6
DEFAULT_SAMPLES_COV = 10**7


@dataclass
class Check:
    family: str
    name: str
    alpha: float | None
    rho: float | None
    closed_form: float
    estimate: float
    error: float
    tolerance: float
    passed: bool

    def line(self) -> str:
        op = "" if self.alpha is None else f" alpha={self.alpha:g} rho={self.rho:g}"
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.family:<18} {self.name:<28}{op}  err={self.error:.3e} tol={self.tolerance:.3e}"


def _check(family, name, closed, est, err, tol, alpha=None, rho=None) -> Check:
    return Check(family, name, alpha, rho, float(closed), float(est), float(err), float(tol), bool(err <= tol))


def moment_checks(channels: ChannelRealization, params: SystemParams, n_samples: int, seed: int) -> list[Check]:
    p_r = repeater_input_power(channels, params)
    est = oracle.estimate_repeater_moments(channels, params, n_samples, seed)
    expected = (p_r, 2 * p_r**2, 6 * p_r**3)
    out = []
    for name, e, x, tol in zip(("m2", "m4", "m6"), est.value, expected, TOL_MOMENTS):
        out.append(_check("moments", name, x, e, abs(e - x) / x, tol))
    return out


def cross_third_order_checks(channels, params, n_samples: int, seed: int) -> list[Check]:
    closed = third_order_cross_moment(channels, params)
    expanded = third_order_cross_moment_expanded(channels, params)
    est = oracle.estimate_cross_third_order(channels, params, n_samples, seed)
    scale = np.linalg.norm(closed)
    return [
        _check("closed_form", "cross_third_expanded", scale, np.linalg.norm(expanded),
               oracle.relative_error(expanded, closed), CLOSED_FORM_TOL),
        _check("cross_third_order", "all_antennas", scale, np.linalg.norm(est.value),
               oracle.relative_error(est.value, closed), TOL_CROSS_THIRD),
    ]


def operating_point_checks(
    channels: ChannelRealization, params: SystemParams, n_b: int, n_cov: int, seed: int
) -> list[Check]:
    a, r = params.alpha, params.rho
    B = bussgang_gain(channels, params)
    C_y = received_covariance(channels, params)
    out = [
        _check("closed_form", "B_expanded", np.linalg.norm(B), np.linalg.norm(bussgang_gain_expanded(channels, params)),
               oracle.relative_error(bussgang_gain_expanded(channels, params), B), CLOSED_FORM_TOL, a, r),
        _check("closed_form", "C_y_expanded", np.linalg.norm(C_y), np.linalg.norm(received_covariance_expanded(channels, params)),
               oracle.relative_error(received_covariance_expanded(channels, params), C_y), CLOSED_FORM_TOL, a, r),
    ]

    est_b = oracle.estimate_bussgang(channels, params, n_b, seed)
    out.append(_check("bussgang_gain", "B_vs_E[y s^H]", np.linalg.norm(B), np.linalg.norm(est_b.value),
                      oracle.relative_error(est_b.value, B), TOL_BUSSGANG, a, r))

    est_c = oracle.estimate_received_cov(channels, params, n_cov, seed + 1)
    out.append(_check("received_cov", "C_y_vs_E[y y^H]", np.linalg.norm(C_y), np.linalg.norm(est_c.value),
                      oracle.relative_error(est_c.value, C_y), TOL_RECEIVED_COV, a, r))

    C_eta = distortion_covariance(C_y, B, check=False)
    lam = float(np.linalg.eigvalsh(C_eta)[0])
    thr = min_eig_threshold(C_eta)
    # error = how far below zero, tolerance = allowed slack
    out.append(_check("distortion_psd", "min_eigenvalue", 0.0, lam, max(-lam, 0.0), -thr, a, r))

    resid = oracle.estimate_residual_correlation(channels, params, B, n_b, seed + 2)
    norm = float(np.linalg.norm(resid.value))
    out.append(_check("uncorrelatedness", "|E[(y-Bs)s^H]|_F", 0.0, norm, norm,
                      UNCORRELATED_SIGMAS * resid.stderr, a, r))
    return out


def run_validation(
    channels: ChannelRealization,
    params: SystemParams,
    operating_points,
    n_b: int = DEFAULT_SAMPLES_B,
    n_cov: int = DEFAULT_SAMPLES_COV,
    seed: int = 0,
) -> list[Check]:
    """Every closed-form vs oracle check for one realization over ``operating_points``."""
    checks = moment_checks(channels, params, n_cov, seed)
    checks += cross_third_order_checks(channels, params, n_cov, seed + 3)
    for a, r in operating_points:
        checks += operating_point_checks(channels, params.at(alpha=a, rho=r), n_b, n_cov, seed)
    return checks


def report_dict(checks: list[Check]) -> dict:
    def clean(d):
        return {k: (None if isinstance(v, float) and not math.isfinite(v) else v) for k, v in d.items()}

    return {
        "passed": all(c.passed for c in checks),
        "families": sorted({c.family for c in checks}),
        "checks": [clean(asdict(c)) for c in checks],
    }
