"""Tests for the SVD subspace machinery and the classical estimator family."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dampedspec import (
    EstimationError,
    ParameterError,
    SpectralParams,
    dmusic_imaging,
    esprit,
    make_atom,
    make_hankel,
    mmv_music,
    mn_music,
    music_spectrum,
    sample_autocorrelation,
    sample_mask,
    smv_signal,
    subspace_split,
    synth_data_matrix,
    truncated_svd,
)
from dampedspec.signal_model import random_mode_matrix
from dampedspec.subspace import estimate_rank

RF3 = dict(r=[0.92, 0.98, 0.85], f=[0.1, 0.4, 0.8])


def ref_matrix(seed=7, m=50, n=50):
    rng = np.random.default_rng(seed)
    p = SpectralParams(c=rng.standard_normal(3) + 1j * rng.standard_normal(3), **RF3)
    return p, synth_data_matrix(p, random_mode_matrix(n, 3, rng), m)


class TestTruncatedSvd:
    def test_identity(self):
        f = truncated_svd(np.eye(3), 3)
        np.testing.assert_allclose(f.s, np.ones(3))

    def test_rank_one(self):
        rng = np.random.default_rng(0)
        u = rng.standard_normal(5) + 1j * rng.standard_normal(5)
        u /= np.linalg.norm(u)
        v = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        v /= np.linalg.norm(v)
        f = truncated_svd(np.outer(u, v.conj()), 1)
        assert f.s[0] == pytest.approx(1.0)
        # factors agree up to a global phase
        assert abs(abs(np.vdot(f.U[:, 0], u)) - 1.0) < 1e-12
        assert abs(abs(np.vdot(f.V[:, 0], v)) - 1.0) < 1e-12

    def test_exact_rank3_reconstruction(self):
        _, x = ref_matrix()
        f = truncated_svd(x, 3)
        err = np.linalg.norm(x - f.reconstruct()) / np.linalg.norm(x)
        assert err < 1e-10

    def test_eckart_young(self):
        # reconstruction error equals the tail singular values
        rng = np.random.default_rng(1)
        x = rng.standard_normal((8, 6)) + 1j * rng.standard_normal((8, 6))
        s_full = np.linalg.svd(x, compute_uv=False)
        for k in (1, 3, 5):
            f = truncated_svd(x, k)
            err = np.linalg.norm(x - f.reconstruct())
            assert err == pytest.approx(np.sqrt(np.sum(s_full[k:] ** 2)), rel=1e-10)

    def test_orthonormal_factors(self):
        _, x = ref_matrix()
        f = truncated_svd(x, 3)
        np.testing.assert_allclose(f.U.conj().T @ f.U, np.eye(3), atol=1e-10)
        np.testing.assert_allclose(f.V.conj().T @ f.V, np.eye(3), atol=1e-10)

    def test_k_out_of_range(self):
        with pytest.raises(ParameterError):
            truncated_svd(np.eye(3), 4)


class TestAutocorrelation:
    def test_constant_signal(self):
        r = sample_autocorrelation(np.ones(4), 2)
        np.testing.assert_allclose(r, np.ones((2, 2)))

    def test_matches_hankel_product(self):
        rng = np.random.default_rng(2)
        y = rng.standard_normal(40) + 1j * rng.standard_normal(40)
        m = 12
        r = sample_autocorrelation(y, m)
        h = make_hankel(y, m)
        np.testing.assert_allclose(r, h @ h.conj().T / (40 - m + 1), atol=1e-12)

    def test_single_exponential_rank_one(self):
        p = SpectralParams(r=[1.0], f=[0.37], c=[2.0])
        r = sample_autocorrelation(smv_signal(p, 32), 8)
        s = np.linalg.svd(r, compute_uv=False)
        assert s[1] < 1e-12 * s[0]

    def test_hermitian_psd(self):
        rng = np.random.default_rng(3)
        y = rng.standard_normal(30) + 1j * rng.standard_normal(30)
        r = sample_autocorrelation(y, 10)
        np.testing.assert_allclose(r, r.conj().T, atol=1e-12)
        assert np.linalg.eigvalsh(r).min() > -1e-12

    def test_too_short(self):
        with pytest.raises(ParameterError):
            sample_autocorrelation(np.ones(5), 5)

    def test_eigenvectors_match_hankel_left_singular_vectors(self):
        # the autocorrelation eigenbasis spans the same subspaces as the
        # Hankel left singular basis
        rng = np.random.default_rng(4)
        p = SpectralParams(
            c=rng.standard_normal(3) + 1j * rng.standard_normal(3), **RF3
        )
        y = smv_signal(p, 63)
        m = 32
        r = sample_autocorrelation(y, m)
        h = make_hankel(y, m)
        evals, evecs = np.linalg.eigh(r)
        u_r = evecs[:, ::-1][:, :3]
        u_h = np.linalg.svd(h, full_matrices=False)[0][:, :3]
        # subspace distance via principal angles
        sv = np.linalg.svd(u_r.conj().T @ u_h, compute_uv=False)
        assert np.abs(sv - 1.0).max() < 1e-8


class TestMusicSpectrum:
    def test_orthogonal_direction_capped(self):
        a0 = make_atom(1.0, 0.3, 8)
        basis = np.linalg.svd(np.outer(a0, a0.conj()), full_matrices=True)[0][:, 1:]
        vals = music_spectrum(basis, [0.3])
        assert vals[0] == pytest.approx(1e15)

    def test_argmax_near_true_frequency(self):
        p = SpectralParams(r=[1.0], f=[0.3], c=[1.0])
        pair = subspace_split(make_hankel(smv_signal(p, 33), 16), 1)
        grid = np.arange(0, 1, 1 / 256)
        vals = music_spectrum(pair.noise, grid)
        assert abs(grid[np.argmax(vals)] - 0.3) <= 1 / 256

    def test_random_basis_below_cap(self):
        rng = np.random.default_rng(5)
        q = np.linalg.qr(rng.standard_normal((16, 12)) + 1j * rng.standard_normal((16, 12)))[0]
        vals = music_spectrum(q, np.arange(0, 1, 0.01))
        assert np.all(vals < 1e15)


class TestSubspacePair:
    def test_completeness(self):
        _, x = ref_matrix()
        pair = subspace_split(x, 3)
        for rf in [(0.9, 0.2), (0.97, 0.55), (0.8, 0.8)]:
            a = make_atom(rf[0], rf[1], 50)
            total = (
                np.linalg.norm(pair.signal.conj().T @ a) ** 2
                + np.linalg.norm(pair.noise.conj().T @ a) ** 2
            )
            assert total == pytest.approx(1.0, abs=1e-10)

    def test_orthogonality(self):
        _, x = ref_matrix()
        pair = subspace_split(x, 3)
        assert np.abs(pair.signal.conj().T @ pair.noise).max() < 1e-10

    def test_noiseless_signal_space_spans_columns(self):
        _, x = ref_matrix()
        pair = mmv_music(x, 3)
        proj = pair.signal @ (pair.signal.conj().T @ x)
        np.testing.assert_allclose(proj, x, atol=1e-10 * np.linalg.norm(x))

    def test_generic_split_k_m_minus_1(self):
        rng = np.random.default_rng(6)
        y = rng.standard_normal((10, 12)) + 1j * rng.standard_normal((10, 12))
        pair = mmv_music(y, 9)
        assert pair.signal.shape == (10, 9) and pair.noise.shape == (10, 1)

    def test_k_too_large(self):
        with pytest.raises(ParameterError):
            mmv_music(np.eye(4), 4)


class TestDmusicImaging:
    def test_reference_smv_peaks(self):
        rng = np.random.default_rng(11)
        p = SpectralParams(
            c=rng.standard_normal(3) + 1j * rng.standard_normal(3), **RF3
        )
        h = make_hankel(smv_signal(p, 99), 50)
        pair = subspace_split(h, 3)
        r_grid = np.minimum(0.75 + 0.002 * np.arange(126), 1.0)
        f_grid = np.arange(0.0, 1.0, 1 / 400)
        img = dmusic_imaging(pair.noise, r_grid, f_grid)
        # the three largest values sit within one grid cell of the truth
        flat = np.argsort(img.ravel())[::-1]
        found = set()
        for idx in flat:
            i, j = divmod(idx, f_grid.size)
            cand = (r_grid[i], f_grid[j])
            if all(abs(cand[0] - r) > 0.01 or abs(cand[1] - f) > 0.01 for r, f in found):
                found.add(cand)
            if len(found) == 3:
                break
        for rk, fk in zip(p.r, p.f):
            assert any(
                abs(rk - r) <= 0.002 and abs(fk - f) <= 1 / 400 for r, f in found
            )

    def test_single_atom_complement(self):
        a0 = make_atom(0.9, 0.25, 12)
        basis = np.linalg.svd(a0[:, None], full_matrices=True)[0][:, 1:]
        img = dmusic_imaging(basis, [0.9], [0.25])
        assert img[0, 0] == pytest.approx(1e15)

    def test_signal_noise_decomposition(self):
        # ||U_s^H a||^2 + ||U_n^H a||^2 = 1 pointwise; imaging is 1/noise-norm
        _, x = ref_matrix()
        pair = subspace_split(x, 3)
        r_grid = [0.8, 0.9, 1.0]
        f_grid = [0.11, 0.51, 0.91]
        img = dmusic_imaging(pair.noise, r_grid, f_grid)
        for i, r in enumerate(r_grid):
            for j, f in enumerate(f_grid):
                a = make_atom(r, f, 50)
                sig = np.linalg.norm(pair.signal.conj().T @ a) ** 2
                noi = np.linalg.norm(pair.noise.conj().T @ a) ** 2
                assert sig + noi == pytest.approx(1.0, abs=1e-10)
                assert img[i, j] == pytest.approx(1 / np.sqrt(noi), rel=1e-9)


class TestMnMusic:
    def test_full_mask_matches_mmv(self):
        _, x = ref_matrix()
        a = mn_music(x, 3)
        b = mmv_music(x, 3)
        np.testing.assert_allclose(np.abs(a.signal.conj().T @ b.signal),
                                   np.eye(3), atol=1e-8)

    def test_empty_mask_errors(self):
        with pytest.raises(ParameterError):
            mn_music(np.zeros((4, 4)), 2)


class TestEsprit:
    def test_single_undamped_mode(self):
        p = SpectralParams(r=[1.0], f=[0.3], c=[1.0])
        x = synth_data_matrix(p, random_mode_matrix(6, 1, 0), 12)
        est = esprit(x, 1)
        assert est.r[0] == pytest.approx(1.0, abs=1e-10)
        assert est.f[0] == pytest.approx(0.3, abs=1e-10)

    def test_reference_config_exact(self):
        p, x = ref_matrix()
        est = esprit(x, 3)
        np.testing.assert_allclose(est.r, p.r, atol=1e-8)
        np.testing.assert_allclose(est.f, p.f, atol=1e-8)

    def test_k_exceeds_rank(self):
        _, x = ref_matrix()
        with pytest.raises(EstimationError):
            esprit(x, 5)

    @given(st.integers(0, 200))
    @settings(max_examples=25, deadline=None)
    def test_exact_recovery_random_instances(self, seed):
        rng = np.random.default_rng(seed)
        k = int(rng.integers(1, 4))
        f = np.sort(rng.uniform(0, 1, k))
        if k > 1 and np.min(np.diff(f)) < 0.05:
            return
        p = SpectralParams(
            r=rng.uniform(0.8, 1.0, k), f=f,
            c=rng.standard_normal(k) + 1j * rng.standard_normal(k),
        )
        x = synth_data_matrix(p, random_mode_matrix(8, k, rng), 24)
        est = esprit(x, k)
        np.testing.assert_allclose(est.r, p.r, atol=1e-8)
        np.testing.assert_allclose(est.f, p.f, atol=1e-8)


def test_estimate_rank_gap():
    _, x = ref_matrix()
    assert estimate_rank(x) == 3
