import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.signal.windows import dpss as scipy_dpss

from dpssvolt import ParameterError, ResolutionError
from dpssvolt.slepian import (DpssParams, band_integral, band_weights, concentration_matrix,
                              dense_dpss, dtft, evaluate_dpswf, eigenvalues_via_quadrature,
                              generate_dpss, grid_frequencies, modulate)


def test_min_eigenvalue_gap_in_reference_window(dpss_200_5):
    # reference value: 1 - lambda_min is about 7e-5 for N=200, NW=5, K=6
    gap = 1 - dpss_200_5.lambda_min
    assert 3.5e-5 <= gap <= 1.4e-4


def test_generation_is_fast():
    start = time.perf_counter()
    generate_dpss(DpssParams(200, 5.0, 6))
    assert time.perf_counter() - start < 1.0


def test_orthonormal(dpss_200_5):
    gram = dpss_200_5.sequences @ dpss_200_5.sequences.T
    assert np.abs(gram - np.eye(6)).max() <= 1e-10


def test_matches_scipy_sequences_and_ratios(dpss_200_5):
    ref, ratios = scipy_dpss(200, 5.0, 6, return_ratios=True)
    signs = np.sign(ref[:, 0])
    assert np.abs(dpss_200_5.sequences - signs[:, None] * ref).max() < 1e-10
    assert np.abs(dpss_200_5.eigenvalues - ratios).max() < 1e-12


def test_small_case_matches_dense_eigensolve():
    params = DpssParams(16, 2.0, 4)
    dset = generate_dpss(params)
    vecs, vals = dense_dpss(params)
    assert np.all(np.diff(dset.eigenvalues) < 0)
    assert dset.eigenvalues[0] > 0.99
    assert np.abs(dset.sequences - vecs).max() <= 1e-8
    assert np.abs(dset.eigenvalues - vals).max() <= 1e-10


def test_symmetry_and_sign_convention(dpss_200_5):
    v = dpss_200_5.sequences
    for k in range(6):
        assert np.allclose(v[k], (-1) ** k * v[k, ::-1], atol=1e-12)
        first = v[k][np.abs(v[k]) > 1e-12][0]
        assert first > 0


def test_invalid_params():
    with pytest.raises(ParameterError):
        DpssParams(10, 2.0, 11)
    with pytest.raises(ParameterError):
        DpssParams(10, 6.0, 2)
    with pytest.raises(ParameterError):
        DpssParams(0, 1.0, 1)


def test_quadrature_eigenvalues(dpss_200_5):
    quad = eigenvalues_via_quadrature(dpss_200_5)
    assert np.abs(quad - dpss_200_5.eigenvalues).max() <= 1e-6


def test_quadrature_rejects_coarse_grid(dpss_200_5):
    with pytest.raises(ResolutionError):
        eigenvalues_via_quadrature(dpss_200_5, 300)
    small = generate_dpss(DpssParams(64, 1.0, 1))
    with pytest.raises(ResolutionError):
        eigenvalues_via_quadrature(small, 128)


def test_full_band_energy(dpss_200_5):
    for k in range(6):
        v = evaluate_dpswf(dpss_200_5, k)
        assert abs(band_integral(np.abs(v.values) ** 2, -0.5, 0.5) - 1) <= 1e-8


def test_inband_cross_products_bounded(dpss_200_5):
    w = dpss_200_5.half_bandwidth
    lam = dpss_200_5.eigenvalues
    specs = [evaluate_dpswf(dpss_200_5, k).values for k in range(6)]
    for k in range(6):
        for kp in range(6):
            if k == kp:
                continue
            val = abs(band_integral(specs[kp] * np.conj(specs[k]), -w, w))
            assert val <= np.sqrt((1 - lam[k]) * (1 - lam[kp])) + 1e-6
            assert val <= np.sqrt(lam[k] * lam[kp]) + 1e-6


def test_dpswf_properties(dpss_200_5):
    for k in range(6):
        grid = evaluate_dpswf(dpss_200_5, k)
        mags = np.abs(grid.values)
        assert mags.max() <= np.sqrt(200) + 1e-12
        if k % 2:
            assert abs(grid.values[np.argmin(np.abs(grid.frequencies))]) <= 1e-10
    g0 = evaluate_dpswf(dpss_200_5, 0)
    assert g0.frequencies[np.argmax(np.abs(g0.values))] == 0.0


def test_dtft_first_index_shift():
    x = np.array([1.0, 2.0, -0.5])
    f = grid_frequencies(16)
    direct = np.array([np.sum(x * np.exp(-2j * np.pi * fi * np.arange(1, 4))) for fi in f])
    assert np.allclose(dtft(x, 16, first_index=1), direct, atol=1e-13)


def test_band_weights_exact_for_trig_polynomials(rng):
    g = 64
    f = grid_frequencies(g)
    coeffs = rng.normal(size=20)
    vals = np.exp(-2j * np.pi * np.outer(f, np.arange(20))) @ coeffs
    lo, hi = -0.13, 0.21
    exact = sum(c * ((np.exp(-2j * np.pi * hi * t) - np.exp(-2j * np.pi * lo * t)) / (-2j * np.pi * t)
                     if t else hi - lo) for t, c in enumerate(coeffs))
    assert abs(vals @ band_weights(g, lo, hi) - exact) < 1e-12
    assert np.allclose(band_weights(g, -0.5, 0.5), 1.0 / g)


def test_modulate_identity_and_concentration(dpss_200_5):
    out, meta = modulate(dpss_200_5, 2, 0.0)
    assert np.array_equal(out, dpss_200_5.sequences[2])
    assert not meta["aliasing"]
    f0 = 0.1
    w = dpss_200_5.half_bandwidth
    mod, _ = modulate(dpss_200_5, 1, f0)
    spec = np.abs(dtft(mod, 1600)) ** 2
    inband = band_integral(spec, f0 - w, f0 + w) + band_integral(spec, -f0 - w, -f0 + w)
    assert inband / (mod @ mod) >= dpss_200_5.eigenvalues[1] - 0.01


def test_modulate_flags_aliasing(dpss_200_5):
    with pytest.warns(RuntimeWarning):
        _, meta = modulate(dpss_200_5, 0, 0.49)
    assert meta["aliasing"]
    with pytest.raises(ParameterError):
        modulate(dpss_200_5, 0, 0.5)


def test_reference_carrier_places_band_at_two_hertz():
    dt = 1 / 30
    dset = generate_dpss(DpssParams(240, 4.0, 1))
    mod, _ = modulate(dset, 0, 2.0 * dt)
    g = 8 * 240
    f_hz = grid_frequencies(g) / dt
    spec = np.abs(dtft(mod, g))
    peak = abs(f_hz[np.argmax(spec)])
    assert abs(peak - 2.0) <= 0.5


@settings(max_examples=30, deadline=None)
@given(n=st.integers(8, 32), nw=st.floats(1.0, 3.5), k=st.integers(1, 5))
def test_property_dense_oracle(n, nw, k):
    k = min(k, n)
    params = DpssParams(n, nw, k)
    dset = generate_dpss(params)
    vecs, vals = dense_dpss(params)
    # skip numerically degenerate eigenvalue clusters in the oracle
    lam = np.sort(np.linalg.eigvalsh(concentration_matrix(n, nw / n)))[::-1]
    if np.min(np.abs(np.diff(lam[: k + 1]))) < 1e-7:
        return
    assert np.abs(dset.sequences - vecs).max() <= 1e-8
    assert np.abs(dset.eigenvalues - vals).max() <= 1e-10


@settings(max_examples=30, deadline=None)
@given(n=st.integers(16, 300), nw=st.floats(1.0, 6.0), k=st.integers(1, 8))
def test_property_invariants(n, nw, k):
    if nw / n >= 0.5:
        return
    dset = generate_dpss(DpssParams(n, nw, min(k, n)))
    gram = dset.sequences @ dset.sequences.T
    assert np.abs(gram - np.eye(gram.shape[0])).max() <= 1e-10
    lam = dset.eigenvalues
    assert np.all((lam > 0) & (lam < 1) | np.isclose(lam, 1.0, atol=1e-15))
    assert np.all(np.diff(lam) <= 0)
