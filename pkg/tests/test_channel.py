"""One-ring covariances, Karhunen-Loeve sampling, effective channel."""

import math

import numpy as np
import pytest

from rsma_sim import (
    ArrayGeometry,
    DimensionMismatch,
    QuantizerProfile,
    UserGeometry,
    draw_aods,
    effective_channel,
    half_wavelength_ula,
    ideal_profile,
    kl_factorize,
    one_ring_covariance,
    sample_channel,
    seeded_rng,
)

from oracles import trapezoid_one_ring


class TestOneRingCovariance:
    def test_unit_diagonal(self):
        geom = half_wavelength_ula(4)
        cov = one_ring_covariance(geom, UserGeometry(aod=math.pi / 3))
        np.testing.assert_array_equal(np.diag(cov), np.ones(4))

    def test_identical_positions_give_all_ones(self):
        geom = ArrayGeometry(np.zeros((3, 2)))
        cov = one_ring_covariance(geom, UserGeometry(aod=1.0))
        np.testing.assert_allclose(cov, np.ones((3, 3)), atol=1e-12)

    def test_matches_trapezoid_oracle(self):
        geom = half_wavelength_ula(4)
        user = UserGeometry(aod=math.pi / 3, spread=math.pi / 6)
        cov = one_ring_covariance(geom, user)
        oracle = trapezoid_one_ring(geom, user)
        assert np.abs(cov - oracle).max() < 1e-8

    def test_hermitian_and_nearly_psd(self):
        geom = half_wavelength_ula(6)
        for aod in (0.2, 1.1, 2.7):
            cov = one_ring_covariance(geom, UserGeometry(aod=aod))
            assert np.abs(cov - cov.conj().T).max() < 1e-12
            assert np.linalg.eigvalsh(cov).min() >= -1e-9

    def test_user_geometry_validation(self):
        with pytest.raises(DimensionMismatch):
            UserGeometry(aod=-0.1)
        with pytest.raises(DimensionMismatch):
            UserGeometry(aod=math.pi)
        with pytest.raises(DimensionMismatch):
            UserGeometry(aod=1.0, spread=0.0)


class TestKlFactorize:
    def test_identity_covariance(self):
        basis, eigvals = kl_factorize(np.eye(5))
        assert basis.shape == (5, 5)
        np.testing.assert_allclose(eigvals, np.ones(5), atol=1e-12)
        np.testing.assert_allclose(basis @ basis.conj().T, np.eye(5), atol=1e-12)

    def test_rank_one(self):
        a = np.array([1.0 + 1j, -2.0, 0.5j])
        cov = np.outer(a, a.conj())
        basis, eigvals = kl_factorize(cov)
        assert basis.shape == (3, 1)
        assert eigvals[0] == pytest.approx(np.linalg.norm(a) ** 2, rel=1e-12)

    def test_reconstruction(self):
        rng = np.random.default_rng(44)
        x = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
        cov = x @ x.conj().T
        basis, eigvals = kl_factorize(cov)
        np.testing.assert_allclose((basis * eigvals) @ basis.conj().T, cov, atol=1e-8)

    def test_one_ring_rank_truncation(self):
        geom = half_wavelength_ula(8)
        cov = one_ring_covariance(geom, UserGeometry(aod=1.0))
        basis, eigvals = kl_factorize(cov)
        assert len(eigvals) <= 8
        assert np.all(eigvals > 0)
        # orthonormal columns
        np.testing.assert_allclose(
            basis.conj().T @ basis, np.eye(len(eigvals)), atol=1e-12
        )


class TestSampleChannel:
    def _factorizations(self, n=4):
        geom = half_wavelength_ula(n)
        return [
            kl_factorize(one_ring_covariance(geom, UserGeometry(aod=a)))
            for a in (0.8, 1.5)
        ]

    def test_deterministic(self):
        facs = self._factorizations()
        a = sample_channel(facs, seeded_rng(7)).matrix
        b = sample_channel(facs, seeded_rng(7)).matrix
        np.testing.assert_array_equal(a, b)

    def test_zero_covariance_gives_zero_channel(self):
        facs = [kl_factorize(np.zeros((3, 3)))]
        realization = sample_channel(facs, seeded_rng(1))
        np.testing.assert_array_equal(realization.matrix, np.zeros((3, 1)))
        assert realization.ranks == (0,)

    def test_column_space(self):
        facs = self._factorizations()
        realization = sample_channel(facs, seeded_rng(3))
        for k, (basis, _) in enumerate(facs):
            h = realization.matrix[:, k]
            projected = basis @ (basis.conj().T @ h)
            np.testing.assert_allclose(projected, h, atol=1e-10)

    def test_empirical_covariance(self):
        facs = self._factorizations()
        rng = seeded_rng(5)
        n, trials = 4, 100_000
        acc = [np.zeros((n, n), dtype=complex) for _ in facs]
        for _ in range(trials):
            h = sample_channel(facs, rng).matrix
            for k in range(len(facs)):
                acc[k] += np.outer(h[:, k], h[:, k].conj())
        for k, (basis, eigvals) in enumerate(facs):
            want = (basis * eigvals) @ basis.conj().T
            got = acc[k] / trials
            rel = np.linalg.norm(got - want) / np.linalg.norm(want)
            assert rel < 0.02

    def test_covariance_metadata_unit_diagonal(self):
        realization = sample_channel(self._factorizations(), seeded_rng(9))
        for cov in realization.covariances:
            np.testing.assert_allclose(np.diag(cov).real, np.ones(4), atol=1e-9)
            assert np.abs(cov - cov.conj().T).max() < 1e-12


class TestDrawAods:
    def test_random_mode_range(self):
        aods = draw_aods(seeded_rng(2), 500, "random")
        assert np.all((aods >= 0.0) & (aods < math.pi))

    def test_correlated_mode_spread(self):
        for seed in range(20):
            aods = draw_aods(seeded_rng(seed), 6, "correlated")
            assert np.all((aods >= 0.0) & (aods < math.pi))
            assert aods.max() - aods.min() <= math.pi / 6 + 1e-12

    def test_unknown_mode(self):
        with pytest.raises(DimensionMismatch):
            draw_aods(seeded_rng(0), 2, "clustered")


class TestEffectiveChannel:
    def test_infinite_resolution_identity(self):
        rng = seeded_rng(8)
        h = rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2))
        np.testing.assert_array_equal(effective_channel(ideal_profile(3, 2), h), h)

    def test_elementwise_example(self):
        profile = QuantizerProfile(
            dac_bits=(1, math.inf),
            adc_bits=(1,),
            dac_alpha=np.array([0.5, 1.0]),
            dac_beta=np.array([0.5, 0.0]),
            adc_alpha=np.array([0.5]),
            adc_beta=np.array([0.5]),
        )
        h = np.array([[1.0], [1.0]], dtype=complex)
        np.testing.assert_allclose(
            effective_channel(profile, h), [[0.25], [0.5]], rtol=1e-15
        )

    def test_matches_diag_products(self):
        rng = seeded_rng(10)
        profile = QuantizerProfile.from_bits([2, 4, 9], [3, 5])
        h = rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2))
        want = np.diag(profile.dac_alpha) @ h @ np.diag(profile.adc_alpha)
        np.testing.assert_allclose(effective_channel(profile, h), want, rtol=1e-13)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            effective_channel(ideal_profile(3, 2), np.ones((2, 2)))
