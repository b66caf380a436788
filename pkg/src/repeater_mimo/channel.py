"""Rayleigh channel realizations with counter-based random substreams."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .scenario import Scenario, SystemParams, node_distance

# Purpose tags for substreams. Values are part of the determinism contract.
PURPOSES = {
    "positions": 0,
    "h": 1,
    "g": 2,
    "h_bar": 3,
    "symbols": 4,
    "noise": 5,
    "bs_noise": 6,
}


@dataclass(frozen=True)
class SeedPolicy:
    """Maps (realization, purpose) labels to independent generators.

    Streams come from ``SeedSequence(master_seed, spawn_key=(index, tag))``,
    so a stream depends only on its label, never on draw order.
    """

    master_seed: int = 0

    def __post_init__(self):
        if not 0 <= int(self.master_seed) < 2**64:
            raise ValueError("master_seed must be a 64-bit unsigned integer")

    def rng(self, index: int, purpose: str) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.master_seed), spawn_key=(int(index), PURPOSES[purpose]))
        return np.random.Generator(np.random.PCG64(ss))


def sample_cn(variance: float, rng: np.random.Generator, size=None):
    """Draw CN(0, variance): independent real/imag parts of variance/2 each."""
    if variance < 0:
        raise ValueError(f"variance must be >= 0, got {variance}")
    scale = np.sqrt(variance / 2.0)
    re = rng.standard_normal(size)
    im = rng.standard_normal(size)
    return scale * (re + 1j * im)


@dataclass(frozen=True)
class ChannelRealization:
    h: np.ndarray  # (K,) UE -> repeater
    g: np.ndarray  # (M,) repeater -> BS
    h_bar: np.ndarray  # (M, K) UE -> BS, one column per UE
    ue_positions: np.ndarray  # (K, 3) meters

    def __post_init__(self):
        h, g, hb = (np.asarray(x, dtype=complex) for x in (self.h, self.g, self.h_bar))
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "h_bar", hb)
        object.__setattr__(self, "ue_positions", np.asarray(self.ue_positions, dtype=float))
        if h.ndim != 1 or g.ndim != 1 or hb.shape != (g.size, h.size):
            raise ValueError(f"inconsistent shapes h{h.shape} g{g.shape} h_bar{hb.shape}")
        if not (np.all(np.isfinite(h)) and np.all(np.isfinite(g)) and np.all(np.isfinite(hb))):
            raise ValueError("channel coefficients must be finite")

    @property
    def num_bs_antennas(self) -> int:
        return self.g.size

    @property
    def num_ues(self) -> int:
        return self.h.size

    @classmethod
    def from_arrays(cls, h, g, h_bar, ue_positions=None) -> "ChannelRealization":
        h = np.atleast_1d(np.asarray(h, dtype=complex))
        g = np.atleast_1d(np.asarray(g, dtype=complex))
        h_bar = np.asarray(h_bar, dtype=complex).reshape(g.size, h.size)
        if ue_positions is None:
            ue_positions = np.full((h.size, 3), np.nan)
        return cls(h, g, h_bar, ue_positions)

    def rotate_ue(self, k: int, theta: float) -> "ChannelRealization":
        """Rotate both links of UE ``k`` by a common phase."""
        phase = np.exp(1j * theta)
        h = self.h.copy()
        hb = self.h_bar.copy()
        h[k] *= phase
        hb[:, k] *= phase
        return ChannelRealization(h, self.g, hb, self.ue_positions)

    def to_json_dict(self) -> dict:
        return {
            "h": complex_to_pairs(self.h),
            "g": complex_to_pairs(self.g),
            "h_bar": complex_to_pairs(self.h_bar),
            "ue_positions": self.ue_positions.tolist(),
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "ChannelRealization":
        return cls(
            pairs_to_complex(d["h"]),
            pairs_to_complex(d["g"]),
            pairs_to_complex(d["h_bar"]),
            np.asarray(d["ue_positions"], dtype=float),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_json_dict())


def complex_to_pairs(x) -> list:
    """Nested lists with each complex entry as ``[re, im]``."""
    x = np.asarray(x, dtype=complex)
    return np.stack([x.real, x.imag], axis=-1).tolist()


def pairs_to_complex(pairs) -> np.ndarray:
    a = np.asarray(pairs, dtype=float)
    return a[..., 0] + 1j * a[..., 1]


def draw_ue_positions(scenario: Scenario, num_ues: int, rng: np.random.Generator) -> np.ndarray:
    x = rng.uniform(*scenario.ue_x_range, size=num_ues)
    y = rng.uniform(*scenario.ue_y_range, size=num_ues)
    z = np.full(num_ues, scenario.ue_height)
    return np.column_stack([x, y, z])


def draw_realization(
    scenario: Scenario,
    params: SystemParams,
    realization_index: int,
    seed_policy: SeedPolicy,
    ue_positions=None,
) -> ChannelRealization:
    """Draw one realization of (h, g, h_bar) together with UE positions.

    ``ue_positions`` pins the UEs instead of dropping them uniformly.
    """
    M, K = params.num_bs_antennas, params.num_ues
    if ue_positions is None:
        ue_positions = draw_ue_positions(scenario, K, seed_policy.rng(realization_index, "positions"))
    ue_positions = np.asarray(ue_positions, dtype=float).reshape(K, 3)

    bs = np.asarray(scenario.bs_position, dtype=float)
    rep = np.asarray(scenario.repeater_position, dtype=float)
    d_ue_rep = np.linalg.norm(ue_positions - rep, axis=1)
    d_ue_bs = np.linalg.norm(ue_positions - bs, axis=1)
    d_rep_bs = node_distance(rep, bs)

    beta_h = np.atleast_1d(scenario.gain(d_ue_rep))
    beta_g = scenario.gain(d_rep_bs)
    beta_hb = np.atleast_1d(scenario.gain(d_ue_bs))

    h = np.sqrt(beta_h) * sample_cn(1.0, seed_policy.rng(realization_index, "h"), K)
    g = np.sqrt(beta_g) * sample_cn(1.0, seed_policy.rng(realization_index, "g"), M)
    h_bar = np.sqrt(beta_hb)[None, :] * sample_cn(1.0, seed_policy.rng(realization_index, "h_bar"), (M, K))
    return ChannelRealization(h, g, h_bar, ue_positions)
