"""Brute-force Monte-Carlo estimators for every expectation behind the closed forms.

Samples are drawn in fixed-size batches; batch ``b`` uses the substreams
``(b, "symbols")`` and ``(b, "noise")`` of ``SeedPolicy(seed)``. Batch
partial sums are merged with ``math.fsum`` so the estimate does not depend on
how many workers computed the batches or in which order they finished.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .channel import ChannelRealization, SeedPolicy, sample_cn
from .scenario import SystemParams

DEFAULT_BATCH = 1 << 16


@dataclass(frozen=True)
class McEstimate:
    """Sample mean with a standard-error proxy.

    ``stderr`` is the Frobenius norm of the entry-wise standard errors;
    ``entry_stderr`` keeps the per-entry values.
    """

    value: np.ndarray | complex | float
    num_samples: int
    stderr: float
    entry_stderr: np.ndarray | float = 0.0


@dataclass
class SampleBatch:
    y: np.ndarray  # (n, M)
    s: np.ndarray  # (n, K)
    u_tilde: np.ndarray  # (n,)


def simulate_batch(channels: ChannelRealization, params: SystemParams, rng_symbols, rng_noise, n: int) -> SampleBatch:
    """Draw ``n`` i.i.d. received vectors with the channels held fixed."""
    M, K = channels.num_bs_antennas, channels.num_ues
    sp = math.sqrt(params.ue_power)
    s = sample_cn(1.0, rng_symbols, (n, K))
    noise_r = sample_cn(params.repeater_noise_var, rng_noise, n)
    w = sample_cn(params.bs_noise_var, rng_noise, (n, M))

    u_tilde = sp * (s @ channels.h) + noise_r
    u = params.alpha * u_tilde
    r = u + params.rho * np.abs(u) ** 2 * u
    y = np.outer(r, channels.g) + sp * (s @ channels.h_bar.T) + w
    return SampleBatch(y=y, s=s, u_tilde=u_tilde)


def simulate_y(channels: ChannelRealization, params: SystemParams, rng: np.random.Generator):
    """One draw of (y, s) through the repeater PA and the direct paths."""
    b = simulate_batch(channels, params, rng, rng, 1)
    return b.y[0], b.s[0]


def _batch_sizes(n_samples: int, batch_size: int) -> list[int]:
    if n_samples < 1:
        raise ValueError("number of samples must be >= 1")
    full, rest = divmod(n_samples, batch_size)
    return [batch_size] * full + ([rest] if rest else [])


def _fsum0(parts: np.ndarray) -> np.ndarray:
    """Exactly-rounded sum over axis 0, real and imaginary parts separately."""
    flat = parts.reshape(parts.shape[0], -1)
    re = np.array([math.fsum(col) for col in flat.real.T])
    if np.iscomplexobj(parts):
        im = np.array([math.fsum(col) for col in flat.imag.T])
        return (re + 1j * im).reshape(parts.shape[1:])
    return re.reshape(parts.shape[1:])


def _accumulate(
    channels: ChannelRealization,
    params: SystemParams,
    n_samples: int,
    seed: int,
    stat: Callable[[SampleBatch], tuple[np.ndarray, np.ndarray]],
    batch_size: int = DEFAULT_BATCH,
    workers: int = 1,
) -> McEstimate:
    """Mean of a per-sample statistic X; ``stat`` returns (sum X, sum |X|^2) over a batch."""
    policy = SeedPolicy(seed)
    sizes = _batch_sizes(n_samples, batch_size)

    def run(idx_n):
        idx, n = idx_n
        batch = simulate_batch(channels, params, policy.rng(idx, "symbols"), policy.rng(idx, "noise"), n)
        s1, s2 = stat(batch)
        return np.asarray(s1), np.asarray(s2, dtype=float)

    jobs = list(enumerate(sizes))
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(run, jobs))
    else:
        parts = [run(j) for j in jobs]

    sum1 = _fsum0(np.stack([p[0] for p in parts]))
    sum2 = _fsum0(np.stack([p[1] for p in parts]))
    mean = sum1 / n_samples
    var = np.maximum(sum2 / n_samples - np.abs(mean) ** 2, 0.0)
    entry_se = np.sqrt(var / n_samples)
    value = mean if np.ndim(mean) else mean[()]
    return McEstimate(value=value, num_samples=n_samples, stderr=float(np.sqrt(np.sum(entry_se**2))), entry_stderr=entry_se)


def estimate_bussgang(channels, params, n_samples: int, seed: int, **kw) -> McEstimate:
    """B_hat = mean of y s^H."""

    def stat(b: SampleBatch):
        return b.y.T @ b.s.conj(), (np.abs(b.y) ** 2).T @ (np.abs(b.s) ** 2)

    return _accumulate(channels, params, n_samples, seed, stat, **kw)


def estimate_received_cov(channels, params, n_samples: int, seed: int, **kw) -> McEstimate:
    """C_y_hat = mean of y y^H, exactly Hermitian."""

    def stat(b: SampleBatch):
        a2 = np.abs(b.y) ** 2
        return b.y.T @ b.y.conj(), a2.T @ a2

    est = _accumulate(channels, params, n_samples, seed, stat, **kw)
    C = est.value
    return McEstimate(0.5 * (C + C.conj().T), est.num_samples, est.stderr, est.entry_stderr)


def estimate_repeater_moments(channels, params, n_samples: int, seed: int, **kw) -> McEstimate:
    """Sample means of (|u~|^2, |u~|^4, |u~|^6) as a length-3 real vector."""

    def stat(b: SampleBatch):
        a = np.abs(b.u_tilde) ** 2
        powers = np.stack([a, a**2, a**3])
        return powers.sum(axis=1), (powers**2).sum(axis=1)

    return _accumulate(channels, params, n_samples, seed, stat, **kw)


def estimate_cross_third_order(channels, params, n_samples: int, seed: int, antenna: int | None = None, **kw) -> McEstimate:
    """Mean of |u~|^2 u~ conj(sqrt(p) sum_j h_bar_{j,n} s_j) for one antenna (or all if ``antenna`` is None)."""
    M = channels.num_bs_antennas
    if antenna is not None and not 0 <= antenna < M:
        raise ValueError(f"antenna index must be in [0, {M}), got {antenna}")
    sp = math.sqrt(params.ue_power)
    hb = channels.h_bar if antenna is None else channels.h_bar[antenna : antenna + 1]

    def stat(b: SampleBatch):
        z = sp * (b.s @ hb.T)  # (n, M')
        x = (np.abs(b.u_tilde) ** 2 * b.u_tilde)[:, None] * z.conj()
        return x.sum(axis=0), (np.abs(x) ** 2).sum(axis=0)

    est = _accumulate(channels, params, n_samples, seed, stat, **kw)
    if antenna is None:
        return est
    return McEstimate(est.value[0], est.num_samples, est.stderr, est.entry_stderr[0])


def estimate_residual_correlation(channels, params, B: np.ndarray, n_samples: int, seed: int, **kw) -> McEstimate:
    """Mean of (y - B s) s^H, which vanishes when B is the Bussgang gain."""

    def stat(b: SampleBatch):
        eta = b.y - b.s @ B.T
        return eta.T @ b.s.conj(), (np.abs(eta) ** 2).T @ (np.abs(b.s) ** 2)

    return _accumulate(channels, params, n_samples, seed, stat, **kw)


def relative_error(estimate, reference) -> float:
    """Frobenius-norm relative error (absolute if the reference is zero)."""
    ref = np.linalg.norm(np.atleast_1d(reference))
    err = np.linalg.norm(np.atleast_1d(np.asarray(estimate) - np.asarray(reference)))
    return float(err / ref) if ref > 0 else float(err)
