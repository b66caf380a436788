import time
from pathlib import Path

import numpy as np
import pytest

from repeater_mimo import ChannelRealization, SystemParams, run_sweep
from repeater_mimo.config import load_config

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
ACCEPTANCE_LINES: list[str] = []


def random_instance(rng: np.random.Generator, M: int = 4, K: int = 2, scale: float = 1.0):
    """Synthetic channels with O(scale) coefficients."""

    def cn(*shape):
        return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)

    return ChannelRealization.from_arrays(cn(K), cn(M), cn(M, K))


def unit_params(M: int = 4, K: int = 2, **kw) -> SystemParams:
    base = dict(num_bs_antennas=M, num_ues=K, ue_power=1.0, repeater_noise_var=0.5, bs_noise_var=0.3)
    base.update(kw)
    return SystemParams(**base)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def _figure_sweep(name):
    cfg = load_config(CONFIGS / f"{name}.ini")
    t0 = time.perf_counter()
    result = run_sweep(cfg.sweep_spec())
    return result, time.perf_counter() - t0


@pytest.fixture(scope="session")
def fig1_sweep():
    return _figure_sweep("fig1")


@pytest.fixture(scope="session")
def fig2_sweep():
    return _figure_sweep("fig2")


@pytest.fixture(scope="session")
def fig3_sweep():
    return _figure_sweep("fig3")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
