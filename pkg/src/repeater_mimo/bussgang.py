"""Closed-form Bussgang gain, received covariance and distortion covariance.

The received signal at the BS is decomposed as ``y = B s + eta`` with
``eta`` uncorrelated with the UE symbols ``s``. For the third-order PA
``r = u + rho |u|^2 u`` driven by a Gaussian input of power ``P_r`` every
expectation reduces to Gaussian moments ``E|x|^{2n} = n! P_r^n``.

Two routes are provided for ``B`` and ``C_y``: a consolidated form used
everywhere, and a literal term-by-term expansion kept as a cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization
from .scenario import SystemParams

PSD_TOL = 1e-8


class DistortionCovarianceError(ArithmeticError):
    """C_eta came out indefinite beyond round-off; the closed forms are inconsistent."""


@dataclass(frozen=True)
class BussgangModel:
    B: np.ndarray  # (M, K)
    C_y: np.ndarray  # (M, M)
    C_eta: np.ndarray  # (M, M)
    repeater_input_power: float

    @property
    def num_bs_antennas(self) -> int:
        return self.B.shape[0]

    @property
    def num_ues(self) -> int:
        return self.B.shape[1]


def _check_dims(channels: ChannelRealization, params: SystemParams):
    if channels.num_bs_antennas != params.num_bs_antennas or channels.num_ues != params.num_ues:
        raise ValueError(
            f"channel dims (M={channels.num_bs_antennas}, K={channels.num_ues}) do not match "
            f"params (M={params.num_bs_antennas}, K={params.num_ues})"
        )


def repeater_input_power(channels: ChannelRealization, params: SystemParams) -> float:
    """E|u~|^2 = p * sum_i |h_i|^2 + sigma_r^2."""
    return float(params.ue_power * np.sum(np.abs(channels.h) ** 2) + params.repeater_noise_var)


def effective_gain(alpha: float, rho: float, p_r: float) -> float:
    """Scalar ``c`` such that the repeater contributes ``alpha * c`` linearly."""
    return 1.0 + 2.0 * rho * alpha**2 * p_r


def repeater_path_power(alpha: float, rho: float, p_r: float) -> float:
    """E|r|^2 for the PA output: a^2 P + 6 rho^2 a^6 P^3 + 4 rho a^4 P^2."""
    return alpha**2 * p_r + 6.0 * rho**2 * alpha**6 * p_r**3 + 4.0 * rho * alpha**4 * p_r**2


def bussgang_gain(channels: ChannelRealization, params: SystemParams, p_r: float | None = None) -> np.ndarray:
    """B = sqrt(p) * alpha * c * g h^T + sqrt(p) * H_bar (unconjugated transpose)."""
    _check_dims(channels, params)
    if p_r is None:
        p_r = repeater_input_power(channels, params)
    sp = np.sqrt(params.ue_power)
    c = effective_gain(params.alpha, params.rho, p_r)
    return sp * params.alpha * c * np.outer(channels.g, channels.h) + sp * channels.h_bar


def bussgang_gain_expanded(channels: ChannelRealization, params: SystemParams) -> np.ndarray:
    """Entry-wise five-term expansion of B, no algebraic consolidation."""
    _check_dims(channels, params)
    g, h, hb = channels.g, channels.h, channels.h_bar
    a, rho, p, s2 = params.alpha, params.rho, params.ue_power, params.repeater_noise_var
    sp = np.sqrt(p)
    M, K = hb.shape
    B = np.empty((M, K), dtype=complex)
    for k in range(K):
        others = sum(abs(h[i]) ** 2 for i in range(K) if i != k)
        for m in range(M):
            B[m, k] = (
                g[m] * a * sp * h[k]
                + 2 * rho * g[m] * a**3 * p * sp * abs(h[k]) ** 2 * h[k]
                + 2 * rho * g[m] * a**3 * p * sp * h[k] * others
                + 2 * rho * g[m] * a**3 * sp * s2 * h[k]
                + sp * hb[m, k]
            )
    return B


def direct_cross_moment(channels: ChannelRealization, params: SystemParams) -> np.ndarray:
    """psi_n = E{u~ * sqrt(p) sum_j conj(h_bar_{j,n}) conj(s_j)} = p sum_i h_i conj(h_bar_{i,n})."""
    return params.ue_power * (channels.h_bar.conj() @ channels.h)


def received_covariance(channels: ChannelRealization, params: SystemParams, p_r: float | None = None) -> np.ndarray:
    _check_dims(channels, params)
    if p_r is None:
        p_r = repeater_input_power(channels, params)
    a, rho, p = params.alpha, params.rho, params.ue_power
    g, hb = channels.g, channels.h_bar
    M = g.size
    psi = direct_cross_moment(channels, params)
    cross = a * effective_gain(a, rho, p_r) * (np.outer(g, psi) + np.outer(psi.conj(), g.conj()))
    C = repeater_path_power(a, rho, p_r) * np.outer(g, g.conj()) + p * (hb @ hb.conj().T) + cross
    C[np.diag_indices(M)] += params.bs_noise_var
    return C


def received_covariance_expanded(channels: ChannelRealization, params: SystemParams) -> np.ndarray:
    """Term-by-term C_y from the individual Gaussian moment expectations."""
    _check_dims(channels, params)
    g, h, hb = channels.g, channels.h, channels.h_bar
    a, rho, p, s2r = params.alpha, params.rho, params.ue_power, params.repeater_noise_var
    M, K = hb.shape
    habs2 = np.abs(h) ** 2

    m2 = p * habs2.sum() + s2r
    m4 = 2 * m2**2
    m6 = 6 * m2**3

    # E{u~ sqrt(p) sum_j conj(hb_{j,n} s_j)} and its mirror
    lin_n = np.array([p * sum(h[i] * np.conj(hb[n, i]) for i in range(K)) for n in range(M)])
    lin_m = np.array([p * sum(np.conj(h[i]) * hb[m, i] for i in range(K)) for m in range(M)])

    # E{|u~|^2 u~ sqrt(p) sum_j conj(hb_{j,n} s_j)} as the three-term expansion
    def third(n, conj):
        hh = np.conj(h) if conj else h
        hv = hb[n] if conj else np.conj(hb[n])
        t1 = 2 * p**2 * sum(habs2[i] * hh[i] * hv[i] for i in range(K))
        t2 = 2 * p**2 * sum(habs2[i] * sum(hh[j] * hv[j] for j in range(K) if j != i) for i in range(K))
        t3 = 2 * p * s2r * sum(hh[i] * hv[i] for i in range(K))
        return t1 + t2 + t3

    cub_n = np.array([third(n, conj=False) for n in range(M)])
    cub_m = np.array([third(m, conj=True) for m in range(M)])

    C = np.empty((M, M), dtype=complex)
    for m in range(M):
        for n in range(M):
            gg = g[m] * np.conj(g[n])
            C[m, n] = (
                gg * a**2 * m2
                + rho**2 * gg * a**6 * m6
                + 2 * rho * gg * a**4 * m4
                + p * sum(hb[m, i] * np.conj(hb[n, i]) for i in range(K))
                + (params.bs_noise_var if m == n else 0.0)
                + g[m] * a * lin_n[n]
                + np.conj(g[n]) * a * lin_m[m]
                + rho * g[m] * a**3 * cub_n[n]
                + rho * np.conj(g[n]) * a**3 * cub_m[m]
            )
    return C


def third_order_cross_moment(channels: ChannelRealization, params: SystemParams) -> np.ndarray:
    """E{|u~|^2 u~ sqrt(p) sum_j conj(h_bar_{j,n} s_j)} for every antenna n, consolidated as 2 P_r psi_n."""
    return 2.0 * repeater_input_power(channels, params) * direct_cross_moment(channels, params)


def third_order_cross_moment_expanded(channels: ChannelRealization, params: SystemParams) -> np.ndarray:
    h, hb = channels.h, channels.h_bar
    p, s2r = params.ue_power, params.repeater_noise_var
    habs2 = np.abs(h) ** 2
    hv = hb.conj()  # (M, K)
    t1 = 2 * p**2 * hv @ (habs2 * h)
    per_j = hv * h[None, :]  # h_j conj(hb_{j,n})
    t2 = 2 * p**2 * (habs2.sum() * per_j.sum(axis=1) - (per_j * habs2[None, :]).sum(axis=1))
    t3 = 2 * p * s2r * per_j.sum(axis=1)
    return t1 + t2 + t3


def min_eig_threshold(C: np.ndarray) -> float:
    M = C.shape[0]
    return -PSD_TOL * float(np.real(np.trace(C))) / M


def distortion_covariance(C_y: np.ndarray, B: np.ndarray, check: bool = True) -> np.ndarray:
    """C_eta = C_y - B B^H, symmetrized; raises if it is indefinite beyond round-off."""
    X = C_y - B @ B.conj().T
    C = 0.5 * (X + X.conj().T)
    if check:
        lam_min = float(np.linalg.eigvalsh(C)[0])
        if lam_min < min_eig_threshold(C):
            raise DistortionCovarianceError(
                f"distortion covariance has min eigenvalue {lam_min:.3e} "
                f"(threshold {min_eig_threshold(C):.3e})"
            )
    return C


def distortion_power(alpha: float, rho: float, p_r: float, repeater_noise_var: float) -> float:
    """Scalar D with C_eta = D g g^H + sigma_BS^2 I.

    Equals E|r|^2 - alpha^2 c^2 (P_r - sigma_r^2), rearranged so that no
    cancellation occurs: D = alpha^2 (sigma_r^2 (1 + 2x)^2 + 2 P_r x^2), x = rho alpha^2 P_r.
    """
    x = rho * alpha**2 * p_r
    return alpha**2 * (repeater_noise_var * (1.0 + 2.0 * x) ** 2 + 2.0 * p_r * x**2)


@dataclass(frozen=True)
class WhitenedModel:
    """The Bussgang model seen through C_eta^{-1/2}.

    The distortion is rank one along g, so C_eta = sigma^2 (P_perp + t^2 g_hat g_hat^H)
    and its inverse square root is known in closed form. ``B_w`` is the
    whitened gain; the noise in this frame is the identity. Working here keeps
    SE evaluation accurate when D |g|^2 exceeds sigma^2 by more than double
    precision can resolve in a dense C_eta.
    """

    B_w: np.ndarray  # (M, K)
    g_hat: np.ndarray  # (M,) unit vector along g
    t: float  # sqrt(1 + D |g|^2 / sigma_BS^2)
    bs_noise_var: float

    def transfer(self, V_w: np.ndarray, other: "WhitenedModel") -> np.ndarray:
        """Re-express combiners from this frame in ``other``'s frame (same g and sigma)."""
        ratio = other.t / self.t
        return V_w + (ratio - 1.0) * np.outer(self.g_hat, self.g_hat.conj() @ V_w)

    def to_receiver(self, V_w: np.ndarray) -> np.ndarray:
        """Combiners acting on the raw received signal y."""
        sigma = np.sqrt(self.bs_noise_var)
        proj = np.outer(self.g_hat, self.g_hat.conj() @ V_w)
        return (V_w + (1.0 / self.t - 1.0) * proj) / sigma

    def from_receiver(self, V: np.ndarray) -> np.ndarray:
        sigma = np.sqrt(self.bs_noise_var)
        proj = np.outer(self.g_hat, self.g_hat.conj() @ V)
        return (V + (self.t - 1.0) * proj) * sigma


def whitened_model(channels: ChannelRealization, params: SystemParams) -> WhitenedModel:
    _check_dims(channels, params)
    p_r = repeater_input_power(channels, params)
    g, h, hb = channels.g, channels.h, channels.h_bar
    M = g.size
    g_norm = float(np.linalg.norm(g))
    if g_norm > 0:
        g_hat = g / g_norm
    else:
        g_hat = np.zeros(M, dtype=complex)
        g_hat[0] = 1.0
    D = distortion_power(params.alpha, params.rho, p_r, params.repeater_noise_var)
    t = float(np.sqrt(1.0 + D * g_norm**2 / params.bs_noise_var))

    sp = np.sqrt(params.ue_power)
    a = sp * params.alpha * effective_gain(params.alpha, params.rho, p_r)
    along = a * g_norm * h + sp * (g_hat.conj() @ hb)  # g_hat^H B, shape (K,)
    perp = sp * (hb - np.outer(g_hat, g_hat.conj() @ hb))  # P_perp B, no repeater term
    B_w = (perp + np.outer(g_hat, along / t)) / np.sqrt(params.bs_noise_var)
    return WhitenedModel(B_w=B_w, g_hat=g_hat, t=t, bs_noise_var=params.bs_noise_var)


def bussgang_model(channels: ChannelRealization, params: SystemParams, check: bool = True) -> BussgangModel:
    p_r = repeater_input_power(channels, params)
    B = bussgang_gain(channels, params, p_r)
    C_y = received_covariance(channels, params, p_r)
    return BussgangModel(B=B, C_y=C_y, C_eta=distortion_covariance(C_y, B, check=check), repeater_input_power=p_r)
