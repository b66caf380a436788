import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from repeater_mimo import Scenario, SeedPolicy, SystemParams, draw_realization
from repeater_mimo.bussgang import bussgang_model, whitened_model
from repeater_mimo.combining import (
    Flavor,
    da_combiner,
    da_combiners,
    dua_combiner,
    dua_combiners,
    hermitian_solve,
    per_ue_se,
    se_for_combiner,
    se_optimal,
    se_report,
)

from conftest import random_instance, unit_params

seeds = st.integers(0, 2**32 - 1)


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def test_two_by_two_hand_solve():
    B = np.eye(2, dtype=complex)
    v = da_combiner(B, np.eye(2), 0)
    np.testing.assert_allclose(v, [1.0, 0.0], atol=1e-15)


def test_single_user_white_noise_is_matched_filter(rng):
    b = crandn(rng, 5)
    v = da_combiner(b[:, None], 0.7 * np.eye(5), 0)
    np.testing.assert_allclose(v, b / 0.7, rtol=1e-12)


def test_se_scalar_and_orthogonal():
    assert se_for_combiner(np.array([1.0]), np.array([[2.0]]), np.array([[0.5]]), 0) == pytest.approx(np.log2(9.0))
    B = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
    assert se_for_combiner(np.array([1.0, 0.0]), B, np.eye(2), 0) == 0.0


def test_se_optimal_examples():
    b = np.array([[1.0], [1.0], [1.0]], dtype=complex)
    assert se_optimal(b, np.eye(3), 0) == pytest.approx(2.0, rel=1e-14)
    # silent repeater, one antenna, one UE: single-user AWGN
    ch = random_instance(np.random.default_rng(1), M=1, K=1)
    p = unit_params(M=1, K=1, alpha=0.0, rho=-0.2, ue_power=0.4)
    m = bussgang_model(ch, p)
    expected = np.log2(1 + 0.4 * abs(ch.h_bar[0, 0]) ** 2 / 0.3)
    assert se_optimal(m.B, m.C_eta, 0) == pytest.approx(expected, rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_se_scale_invariance(seed):
    rng = np.random.default_rng(seed)
    B, v = crandn(rng, 4, 3), crandn(rng, 4)
    C = np.eye(4) * 0.5
    assert se_for_combiner(2 * v, B, C, 1) == pytest.approx(se_for_combiner(v, B, C, 1), rel=1e-12, abs=1e-15)


def test_se_errors():
    B = np.eye(2, dtype=complex)
    with pytest.raises(ZeroDivisionError):
        se_for_combiner(np.array([1.0, 0.0]), B[:, :1], np.zeros((2, 2)), 0)
    with pytest.raises(ValueError):
        se_for_combiner(np.zeros(2), B, np.eye(2), 0)
    with pytest.raises(ValueError):
        da_combiner(B, np.eye(2), 2)
    with pytest.raises(ValueError):
        da_combiner(B, np.full((2, 2), np.nan), 0)


def test_hermitian_solve_ridge_fallback():
    A = np.array([[1.0, 1.0], [1.0, 1.0]], dtype=complex)  # singular
    x = hermitian_solve(A, np.array([1.0, 1.0], dtype=complex))
    assert np.all(np.isfinite(x))
    np.testing.assert_allclose(A @ x, [1.0, 1.0], rtol=1e-6)


@settings(max_examples=25, deadline=None)
@given(seeds, st.sampled_from([0.5, 1.0, 2.0]), st.sampled_from([-0.02, -0.1, -0.3]))
def test_da_is_optimal(seed, a, r):
    rng = np.random.default_rng(seed)
    ch = random_instance(rng, M=4, K=3)
    m = bussgang_model(ch, unit_params(M=4, K=3, alpha=a, rho=r))
    for k in range(3):
        v = da_combiner(m.B, m.C_eta, k)
        best = se_for_combiner(v, m.B, m.C_eta, k)
        assert se_optimal(m.B, m.C_eta, k) == pytest.approx(best, rel=1e-9)
        for _ in range(20):
            u = crandn(rng, 4)
            assert best >= se_for_combiner(u / np.linalg.norm(u), m.B, m.C_eta, k) - 1e-12
            assert best >= se_for_combiner(v + 0.01 * np.linalg.norm(v) * u, m.B, m.C_eta, k) - 1e-12


def test_dua_equals_da_at_rho_zero(rng):
    ch = random_instance(rng)
    p = unit_params(alpha=1.4)
    m = bussgang_model(ch, p)
    for k in range(2):
        np.testing.assert_array_equal(dua_combiner(ch, p, k), da_combiner(m.B, m.C_eta, k))
    np.testing.assert_array_equal(per_ue_se(ch, p, "DA").per_ue, per_ue_se(ch, p, "DuA").per_ue)


def test_alpha_zero_combiners(rng):
    ch = random_instance(rng, M=4, K=3)
    p = unit_params(M=4, K=3, alpha=0.0, rho=-0.4, ue_power=0.6)
    m = bussgang_model(ch, p)
    for k in range(3):
        others = np.delete(ch.h_bar, k, axis=1)
        A = 0.6 * others @ others.conj().T + 0.3 * np.eye(4)
        ref = np.linalg.solve(A, np.sqrt(0.6) * ch.h_bar[:, k])
        np.testing.assert_allclose(da_combiner(m.B, m.C_eta, k), ref, rtol=1e-10)
        np.testing.assert_allclose(dua_combiner(ch, p, k), ref, rtol=1e-10)


@settings(max_examples=25, deadline=None)
@given(seeds, st.sampled_from([0.5, 1.0, 2.0]), st.sampled_from([-0.02, -0.1, -0.3]))
def test_da_dominates_dua(seed, a, r):
    rng = np.random.default_rng(seed)
    ch = random_instance(rng, M=4, K=3)
    p = unit_params(M=4, K=3, alpha=a, rho=r)
    m = bussgang_model(ch, p)
    da = se_report(da_combiners(m), m).per_ue
    dua = se_report(dua_combiners(ch, p), m).per_ue
    assert np.all(da >= dua - 1e-12)
    assert np.all(da >= 0) and np.all(dua >= 0)


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_alpha_zero_independent_of_rho(seed):
    ch = random_instance(np.random.default_rng(seed))
    ref = per_ue_se(ch, unit_params(alpha=0.0), "DA").per_ue
    for r in (-0.01, -1.0, -100.0):
        for fl in Flavor:
            np.testing.assert_allclose(per_ue_se(ch, unit_params(alpha=0.0, rho=r), fl).per_ue, ref, rtol=1e-12)


@settings(max_examples=25, deadline=None)
@given(seeds, st.integers(0, 2), st.floats(0, 2 * np.pi), st.sampled_from(["DA", "DuA"]))
def test_phase_rotation_invariance(seed, k, theta, flavor):
    rng = np.random.default_rng(seed)
    ch = random_instance(rng, M=4, K=3)
    p = unit_params(M=4, K=3, alpha=1.1, rho=-0.15)
    a = per_ue_se(ch, p, flavor).per_ue
    b = per_ue_se(ch.rotate_ue(k, theta), p, flavor).per_ue
    np.testing.assert_allclose(b, a, rtol=1e-10, atol=1e-12)


def test_flavor_parse():
    assert Flavor.parse("dua") is Flavor.DUA
    assert Flavor.parse(" DA ") is Flavor.DA
    with pytest.raises(ValueError):
        Flavor.parse("mmse")


# Dense and whitened paths must agree wherever the dense one is well conditioned.


@pytest.mark.parametrize("alpha", [0.0, 1.0, 30.0, 1e3, 1e4])
@pytest.mark.parametrize("rho", [0.0, -1e3, -1e4, -1e5])
def test_whitened_matches_dense_on_realistic_channels(alpha, rho):
    sc, base = Scenario(), SystemParams(num_bs_antennas=16, num_ues=4)
    for r in range(3):
        ch = draw_realization(sc, base, r, SeedPolicy(3))
        p = base.at(alpha=alpha, rho=rho)
        m = bussgang_model(ch, p)
        dense_da = se_report(da_combiners(m), m).per_ue
        dense_dua = se_report(dua_combiners(ch, p), m).per_ue
        np.testing.assert_allclose(per_ue_se(ch, p, "DA").per_ue, dense_da, rtol=1e-7)
        np.testing.assert_allclose(per_ue_se(ch, p, "DuA").per_ue, dense_dua, rtol=1e-7)


def test_whitened_da_bounded_below_by_projected_model():
    # With the g-direction discarded, noise is sigma^2 I and the direct paths are
    # projected onto g's complement. DA can never do worse than that receiver.
    sc, base = Scenario.near_repeater(), SystemParams(num_bs_antennas=64, num_ues=8)
    for r in range(5):
        ch = draw_realization(sc, base, r, SeedPolicy(2026))
        p = base.at(alpha=1e5, rho=-1e5)
        wm = whitened_model(ch, p)
        P = np.eye(64) - np.outer(wm.g_hat, wm.g_hat.conj())
        Bp = np.sqrt(p.ue_power) * P @ ch.h_bar
        bound = [se_optimal(Bp, p.bs_noise_var * np.eye(64), k) for k in range(8)]
        da = per_ue_se(ch, p, "DA").per_ue
        assert np.all(da >= np.array(bound) - 1e-9)
        assert np.all(np.isfinite(da))
