"""(alpha, rho) sweeps averaged over channel realizations."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bussgang import whitened_model
from .channel import ChannelRealization, SeedPolicy, draw_realization
from .combining import Flavor, per_ue_se, whitened_da_combiners, whitened_se
from .scenario import Scenario, SystemParams

log = logging.getLogger(__name__)

RETAIN_MAX_CELLS = 10_000


def default_alpha_grid(num: int = 26, log10_min: float = 0.0, log10_max: float = 5.0) -> tuple[float, ...]:
    return (0.0,) + tuple(float(a) for a in np.logspace(log10_min, log10_max, num))


DEFAULT_RHO_GRID = (0.0, -1e3, -1e4, -1e5)


class SweepError(RuntimeError):
    pass


@dataclass(frozen=True)
class SweepSpec:
    alpha_grid: tuple[float, ...] = field(default_factory=default_alpha_grid)
    rho_grid: tuple[float, ...] = DEFAULT_RHO_GRID
    num_realizations: int = 100
    scenario: Scenario = field(default_factory=Scenario)
    params: SystemParams = field(default_factory=SystemParams)
    flavors: tuple[Flavor, ...] = (Flavor.DA, Flavor.DUA)
    master_seed: int = 0
    retain_samples: bool = True

    def __post_init__(self):
        if not self.alpha_grid or not self.rho_grid or not self.flavors:
            raise ValueError("alpha grid, rho grid and flavors must be non-empty")
        if self.num_realizations < 1:
            raise ValueError("num_realizations must be >= 1")
        if any(a < 0 for a in self.alpha_grid):
            raise ValueError("alpha grid values must be >= 0")
        if any(r > 0 for r in self.rho_grid):
            raise ValueError("rho grid values must be <= 0")
        object.__setattr__(self, "flavors", tuple(Flavor(f) for f in self.flavors))

    @property
    def shape(self) -> tuple[int, int, int]:
        return len(self.alpha_grid), len(self.rho_grid), len(self.flavors)


@dataclass
class SweepResult:
    spec: SweepSpec
    mean: np.ndarray  # (n_alpha, n_rho, n_flavor)
    std: np.ndarray
    samples: np.ndarray | None = None  # (R, n_alpha, n_rho, n_flavor)

    def curve(self, rho: float, flavor: Flavor | str) -> np.ndarray:
        j = self.spec.rho_grid.index(rho)
        f = self.spec.flavors.index(Flavor(flavor))
        return self.mean[:, j, f]

    def rows(self):
        """(alpha, rho, flavor, mean, std, R) sorted by (rho, flavor, alpha)."""
        s = self.spec
        out = []
        for i, a in enumerate(s.alpha_grid):
            for j, r in enumerate(s.rho_grid):
                for f, fl in enumerate(s.flavors):
                    out.append((a, r, fl.value, float(self.mean[i, j, f]), float(self.std[i, j, f]), s.num_realizations))
        return sorted(out, key=lambda row: (row[1], row[2], row[0]))


def evaluate_cell_per_ue(channels: ChannelRealization, params: SystemParams, flavor: Flavor | str) -> np.ndarray:
    """Per-UE SE at the operating point in ``params``, evaluated under the true model."""
    return per_ue_se(channels, params, flavor).per_ue


def evaluate_cell(channels: ChannelRealization, params: SystemParams, flavor: Flavor | str) -> float:
    return float(np.sum(evaluate_cell_per_ue(channels, params, flavor)))


def evaluate_realization(spec: SweepSpec, index: int) -> np.ndarray:
    """Sum SE for every grid cell of one realization, shape (n_alpha, n_rho, n_flavor)."""
    channels = draw_realization(spec.scenario, spec.params, index, SeedPolicy(spec.master_seed))
    out = np.empty(spec.shape)
    for i, a in enumerate(spec.alpha_grid):
        lin = V_lin = None
        for j, r in enumerate(spec.rho_grid):
            try:
                if lin is None and Flavor.DUA in spec.flavors:
                    # the ideal-PA model (and so every DuA combiner) only depends on alpha
                    lin = whitened_model(channels, spec.params.at(alpha=a, rho=0.0))
                    V_lin = whitened_da_combiners(lin)
                wm = whitened_model(channels, spec.params.at(alpha=a, rho=r))
                for f, fl in enumerate(spec.flavors):
                    V = whitened_da_combiners(wm) if fl is Flavor.DA else lin.transfer(V_lin, wm)
                    out[i, j, f] = whitened_se(V, wm).sum_se
            except Exception as exc:
                raise SweepError(f"cell failed at realization={index}, alpha={a!r}, rho={r!r}: {exc}") from exc
    return out


def run_sweep(spec: SweepSpec, workers: int = 1, progress=None) -> SweepResult:
    """Average sum SE over realizations for every (alpha, rho, flavor) cell.

    Realizations are evaluated in parallel but folded in index order, so the
    result is bit-identical for any worker count.
    """
    R = spec.num_realizations
    retain = spec.retain_samples and int(np.prod(spec.shape)) <= RETAIN_MAX_CELLS
    samples = np.empty((R,) + spec.shape) if retain else None
    mean = np.zeros(spec.shape)
    m2 = np.zeros(spec.shape)

    def fold(r, x):
        nonlocal mean, m2
        delta = x - mean
        mean = mean + delta / (r + 1)
        m2 = m2 + delta * (x - mean)
        if samples is not None:
            samples[r] = x
        if progress is not None:
            progress(r + 1, R)

    if workers > 1 and R > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            for r, x in enumerate(ex.map(lambda i: evaluate_realization(spec, i), range(R))):
                fold(r, x)
    else:
        for r in range(R):
            fold(r, evaluate_realization(spec, r))

    std = np.sqrt(m2 / (R - 1)) if R > 1 else np.zeros(spec.shape)
    return SweepResult(spec=spec, mean=mean, std=std, samples=samples)
