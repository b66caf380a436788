import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from repeater_mimo import ChannelRealization, Scenario, SeedPolicy, SystemParams, draw_realization
from repeater_mimo.bussgang import (
    DistortionCovarianceError,
    bussgang_gain,
    bussgang_gain_expanded,
    bussgang_model,
    direct_cross_moment,
    distortion_covariance,
    distortion_power,
    min_eig_threshold,
    received_covariance,
    received_covariance_expanded,
    repeater_input_power,
    repeater_path_power,
    third_order_cross_moment,
    third_order_cross_moment_expanded,
    whitened_model,
)
from repeater_mimo.runner import DEFAULT_RHO_GRID, default_alpha_grid

from conftest import random_instance, unit_params

seeds = st.integers(0, 2**32 - 1)
alphas = st.sampled_from([0.0, 0.3, 1.0, 2.5])
rhos = st.sampled_from([0.0, -0.01, -0.1, -0.5])


def scalar(g=1.0, h=1.0, hb=0.0):
    return ChannelRealization.from_arrays([h], [g], [[hb]])


def scalar_params(**kw):
    base = dict(num_bs_antennas=1, num_ues=1, ue_power=1.0, repeater_noise_var=1e-30, bs_noise_var=0.25)
    base.update(kw)
    return SystemParams(**base)


def test_repeater_input_power_examples():
    ch = ChannelRealization.from_arrays([0.0], [1.0], [[0.0]])
    assert repeater_input_power(ch, scalar_params(repeater_noise_var=1.0)) == 1.0
    ch2 = ChannelRealization.from_arrays([1.0, 1.0], [1.0], [[0.0, 0.0]])
    p2 = SystemParams(num_bs_antennas=1, num_ues=2, ue_power=1.0, repeater_noise_var=0.5, bs_noise_var=1.0)
    assert repeater_input_power(ch2, p2) == 2.5
    ch3 = ChannelRealization.from_arrays([1j], [1.0], [[0.0]])
    assert repeater_input_power(ch3, scalar_params(ue_power=2.0)) == pytest.approx(2.0)


def test_scalar_bussgang_gain():
    p = scalar_params(alpha=1.0, rho=-0.1)
    assert bussgang_gain(scalar(), p)[0, 0] == pytest.approx(0.8, rel=1e-12)
    assert bussgang_gain_expanded(scalar(), p)[0, 0] == pytest.approx(0.8, rel=1e-12)


def test_scalar_received_covariance():
    p = scalar_params(repeater_noise_var=1.0, alpha=1.0, rho=-0.1)
    C = received_covariance(scalar(), p)
    assert C[0, 0] == pytest.approx(0.88 + 0.25, rel=1e-12)
    p0 = scalar_params(alpha=1.0)
    assert received_covariance(scalar(), p0)[0, 0] == pytest.approx(1.25, rel=1e-12)


def test_third_order_scalar():
    ch = scalar(hb=1.0)
    p = scalar_params()
    assert third_order_cross_moment(ch, p)[0] == pytest.approx(2.0, rel=1e-12)
    assert third_order_cross_moment_expanded(ch, p)[0] == pytest.approx(2.0, rel=1e-12)


def test_alpha_zero_reductions(rng):
    ch = random_instance(rng)
    p = unit_params(alpha=0.0, rho=-0.3)
    np.testing.assert_allclose(bussgang_gain(ch, p), ch.h_bar, rtol=1e-15)
    C = received_covariance(ch, p)
    np.testing.assert_allclose(C, ch.h_bar @ ch.h_bar.conj().T + 0.3 * np.eye(4), atol=1e-14)
    np.testing.assert_allclose(distortion_covariance(C, bussgang_gain(ch, p)), 0.3 * np.eye(4), atol=1e-13)


def test_rho_zero_distortion_covariance(rng):
    ch = random_instance(rng, M=5, K=3)
    p = unit_params(M=5, K=3, alpha=1.7)
    m = bussgang_model(ch, p)
    expected = 1.7**2 * 0.5 * np.outer(ch.g, ch.g.conj()) + 0.3 * np.eye(5)
    np.testing.assert_allclose(m.C_eta, expected, atol=1e-12)
    np.testing.assert_allclose(m.B, 1.7 * np.outer(ch.g, ch.h) + ch.h_bar, atol=1e-14)


def _rel(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


@settings(max_examples=40, deadline=None)
@given(seeds, alphas, rhos, st.sampled_from([1.0, 1e-5]))
def test_consolidated_matches_expanded(seed, a, r, scale):
    rng = np.random.default_rng(seed)
    ch = random_instance(rng, M=3, K=3, scale=scale)
    p = unit_params(M=3, K=3, alpha=a / scale, rho=r * scale**2, repeater_noise_var=0.5 * scale**2)
    assert _rel(bussgang_gain(ch, p), bussgang_gain_expanded(ch, p)) <= 1e-12
    assert _rel(received_covariance(ch, p), received_covariance_expanded(ch, p)) <= 1e-12
    np.testing.assert_allclose(
        third_order_cross_moment(ch, p), third_order_cross_moment_expanded(ch, p), rtol=1e-12, atol=1e-300
    )


@settings(max_examples=40, deadline=None)
@given(seeds, alphas, rhos)
def test_rank_one_repeater_term(seed, a, r):
    rng = np.random.default_rng(seed)
    ch = random_instance(rng, M=5, K=3)
    p = unit_params(M=5, K=3, alpha=a, rho=r)
    s = np.linalg.svd(bussgang_gain(ch, p) - ch.h_bar, compute_uv=False)
    assert s[1] <= 1e-10 * max(s[0], 1e-300)


@settings(max_examples=40, deadline=None)
@given(seeds, alphas, rhos)
def test_distortion_is_rank_one_plus_noise(seed, a, r):
    rng = np.random.default_rng(seed)
    ch = random_instance(rng)
    p = unit_params(alpha=a, rho=r)
    m = bussgang_model(ch, p)
    D = distortion_power(a, r, m.repeater_input_power, p.repeater_noise_var)
    expected = D * np.outer(ch.g, ch.g.conj()) + p.bs_noise_var * np.eye(4)
    assert _rel(m.C_eta, expected) <= 1e-10
    assert np.linalg.eigvalsh(m.C_eta)[0] >= min_eig_threshold(m.C_eta)


def test_distortion_psd_on_sweep_grid():
    sc = Scenario()
    base = SystemParams(num_bs_antennas=16, num_ues=4)
    for r in range(5):
        ch = draw_realization(sc, base, r, SeedPolicy(7))
        for a in default_alpha_grid():
            for rho in DEFAULT_RHO_GRID:
                m = bussgang_model(ch, base.at(alpha=a, rho=rho))
                assert np.linalg.eigvalsh(m.C_eta)[0] >= min_eig_threshold(m.C_eta)


def test_distortion_covariance_rejects_indefinite():
    C_y = np.eye(2, dtype=complex)
    B = np.array([[2.0], [0.0]], dtype=complex)
    with pytest.raises(DistortionCovarianceError):
        distortion_covariance(C_y, B)
    # unchecked path still returns the Hermitian part
    X = distortion_covariance(C_y, B, check=False)
    np.testing.assert_array_equal(X, X.conj().T)


def test_distortion_covariance_is_exactly_hermitian(rng):
    ch = random_instance(rng, M=6, K=2)
    m = bussgang_model(ch, unit_params(M=6, alpha=1.3, rho=-0.2))
    np.testing.assert_array_equal(m.C_eta, m.C_eta.conj().T)


@given(st.floats(0.1, 10.0), st.floats(1e-3, 10.0), st.floats(0.01, 0.99))
def test_compression_lowers_g_path_power(a, p_r, frac):
    rho = -frac / (3 * a**2 * p_r)
    assert repeater_path_power(a, rho, p_r) < repeater_path_power(a, 0.0, p_r)


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(0, 1), st.floats(0, 2 * np.pi), alphas, rhos)
def test_phase_rotation_keeps_gain_magnitudes(seed, k, theta, a, r):
    rng = np.random.default_rng(seed)
    ch = random_instance(rng)
    p = unit_params(alpha=a, rho=r)
    B0 = bussgang_gain(ch, p)
    B1 = bussgang_gain(ch.rotate_ue(k, theta), p)
    np.testing.assert_allclose(np.abs(B1), np.abs(B0), rtol=1e-12, atol=1e-14)


def test_dimension_mismatch(rng):
    ch = random_instance(rng, M=4, K=2)
    with pytest.raises(ValueError):
        bussgang_gain(ch, unit_params(M=5, K=2))


def test_direct_cross_moment_definition(rng):
    ch = random_instance(rng, M=3, K=2)
    p = unit_params(M=3, K=2, ue_power=0.7)
    psi = direct_cross_moment(ch, p)
    for n in range(3):
        assert psi[n] == pytest.approx(0.7 * sum(ch.h[i] * np.conj(ch.h_bar[n, i]) for i in range(2)))


# Whitened frame


@settings(max_examples=30, deadline=None)
@given(seeds, alphas, rhos)
def test_whitened_frame_whitens(seed, a, r):
    rng = np.random.default_rng(seed)
    ch = random_instance(rng)
    p = unit_params(alpha=a, rho=r)
    m = bussgang_model(ch, p)
    wm = whitened_model(ch, p)
    # W = C_eta^{-1/2}, applied via from_receiver's inverse
    W = wm.to_receiver(np.eye(4)).conj().T
    np.testing.assert_allclose(W @ m.C_eta @ W.conj().T, np.eye(4), atol=1e-10)
    np.testing.assert_allclose(W @ m.B, wm.B_w, atol=1e-10)
    V = rng.standard_normal((4, 2)) + 1j * rng.standard_normal((4, 2))
    np.testing.assert_allclose(wm.from_receiver(wm.to_receiver(V)), V, atol=1e-12)


def test_whitened_transfer_roundtrip(rng):
    ch = random_instance(rng)
    w1 = whitened_model(ch, unit_params(alpha=2.0, rho=-0.05))
    w2 = whitened_model(ch, unit_params(alpha=2.0))
    V = rng.standard_normal((4, 2)) + 1j * rng.standard_normal((4, 2))
    np.testing.assert_allclose(w2.transfer(w1.transfer(V, w2), w1), V, atol=1e-12)
    # equal to passing through the receiver domain
    np.testing.assert_allclose(w1.transfer(V, w2), w2.from_receiver(w1.to_receiver(V)), atol=1e-12)
