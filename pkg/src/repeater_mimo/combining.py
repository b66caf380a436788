"""Distortion-aware (DA) and distortion-unaware (DuA) combining, and SE evaluation."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .bussgang import BussgangModel, WhitenedModel, bussgang_model, whitened_model
from .channel import ChannelRealization
from .scenario import SystemParams

RIDGE_REL = 1e-12


class Flavor(str, Enum):
    DA = "DA"
    DUA = "DuA"

    @classmethod
    def parse(cls, name: str) -> "Flavor":
        for f in cls:
            if f.value.lower() == name.strip().lower():
                return f
        raise ValueError(f"unknown combiner flavor {name!r} (expected DA or DuA)")


@dataclass(frozen=True)
class SeReport:
    per_ue: np.ndarray

    @property
    def sum_se(self) -> float:
        return float(np.sum(self.per_ue))


def hermitian_solve(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve A x = b for Hermitian PSD A by Cholesky, retrying with a small ridge."""
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
        raise ValueError("non-finite input to Hermitian solve")
    try:
        return cho_solve(cho_factor(A, lower=True, check_finite=False), b, check_finite=False)
    except LinAlgError:
        M = A.shape[0]
        ridge = RIDGE_REL * float(np.real(np.trace(A))) / M
        return cho_solve(cho_factor(A + ridge * np.eye(M), lower=True, check_finite=False), b, check_finite=False)


def _interference_plus_distortion(B: np.ndarray, C_eta: np.ndarray, k: int) -> np.ndarray:
    others = np.delete(B, k, axis=1)
    return others @ others.conj().T + C_eta


def _check_k(B: np.ndarray, k: int):
    if not 0 <= k < B.shape[1]:
        raise ValueError(f"UE index must be in [0, {B.shape[1]}), got {k}")


def da_combiner(B: np.ndarray, C_eta: np.ndarray, k: int) -> np.ndarray:
    """v_k = (sum_{i != k} b_i b_i^H + C_eta)^{-1} b_k."""
    _check_k(B, k)
    return hermitian_solve(_interference_plus_distortion(B, C_eta, k), B[:, k])


def da_combiners(model: BussgangModel) -> np.ndarray:
    """All DA combiners as the columns of an (M, K) matrix."""
    return np.column_stack([da_combiner(model.B, model.C_eta, k) for k in range(model.num_ues)])


def dua_combiner(channels: ChannelRealization, params: SystemParams, k: int) -> np.ndarray:
    """DA formula applied to the ideal-PA model (rho forced to 0)."""
    lin = bussgang_model(channels, params.at(rho=0.0))
    return da_combiner(lin.B, lin.C_eta, k)


def dua_combiners(channels: ChannelRealization, params: SystemParams) -> np.ndarray:
    return da_combiners(bussgang_model(channels, params.at(rho=0.0)))


def se_for_combiner(v: np.ndarray, B: np.ndarray, C_eta: np.ndarray, k: int) -> float:
    """Achievable SE of UE ``k`` when combining with ``v`` (bits/s/Hz)."""
    _check_k(B, k)
    v = np.asarray(v, dtype=complex)
    if not np.all(np.isfinite(v)) or not np.any(v):
        raise ValueError("combiner must be finite and nonzero")
    gains = np.abs(v.conj() @ B) ** 2
    denom = np.delete(gains, k).sum() + float(np.real(v.conj() @ C_eta @ v))
    if not denom > 0:
        raise ZeroDivisionError("interference-plus-distortion power is zero")
    return float(np.log2(1.0 + gains[k] / denom))


def se_optimal(B: np.ndarray, C_eta: np.ndarray, k: int) -> float:
    """SE reached by the DA combiner, from one Hermitian solve."""
    _check_k(B, k)
    b = B[:, k]
    x = hermitian_solve(_interference_plus_distortion(B, C_eta, k), b)
    return float(np.log2(1.0 + np.real(b.conj() @ x)))


def se_report(V: np.ndarray, model: BussgangModel) -> SeReport:
    """Per-UE SE under the true model for combiners stacked as columns of ``V``."""
    return SeReport(np.array([se_for_combiner(V[:, k], model.B, model.C_eta, k) for k in range(model.num_ues)]))


# Whitened-frame path: noise-plus-distortion is the identity, so the DA
# combiner is a plain MMSE solve with well-scaled entries.


def whitened_da_combiners(wm: WhitenedModel) -> np.ndarray:
    """DA combiners in the whitened frame of ``wm``, one column per UE."""
    B = wm.B_w
    M, K = B.shape
    gram = B @ B.conj().T
    out = np.empty((M, K), dtype=complex)
    for k in range(K):
        A = gram - np.outer(B[:, k], B[:, k].conj())
        A[np.diag_indices(M)] += 1.0
        out[:, k] = hermitian_solve(A, B[:, k])
    return out


def whitened_se(V_w: np.ndarray, wm: WhitenedModel) -> SeReport:
    """Per-UE SE for whitened-frame combiners under the model ``wm``."""
    G = np.abs(V_w.conj().T @ wm.B_w) ** 2  # G[k, i] = |v_k^H b_i|^2
    signal = np.diag(G).copy()
    np.fill_diagonal(G, 0.0)
    denom = G.sum(axis=1) + np.sum(np.abs(V_w) ** 2, axis=0)
    return SeReport(np.log2(1.0 + signal / denom))


def combiners_for(channels: ChannelRealization, params: SystemParams, flavor, true_model: WhitenedModel | None = None) -> np.ndarray:
    """Combiners of the given flavor, expressed in the whitened frame of the true model."""
    wm = whitened_model(channels, params) if true_model is None else true_model
    if Flavor(flavor) is Flavor.DA:
        return whitened_da_combiners(wm)
    lin = whitened_model(channels, params.at(rho=0.0))
    return lin.transfer(whitened_da_combiners(lin), wm)


def per_ue_se(channels: ChannelRealization, params: SystemParams, flavor) -> SeReport:
    """Per-UE SE at the operating point in ``params``; combiners formed per ``flavor``."""
    wm = whitened_model(channels, params)
    return whitened_se(combiners_for(channels, params, flavor, wm), wm)
