"""Sobol batches, quantile transforms and CRN payload lifecycle."""

import math

import numpy as np
import pytest
from scipy.special import ndtri
from scipy.stats import qmc as scipy_qmc

from contractopt.errors import (
    InvalidConfigError,
    NumericalDomainError,
    UnsupportedDimensionError,
)
from contractopt.qmc import (
    CrnPayload,
    NoiseKind,
    held_out_batch,
    laplace_quantile,
    logistic_quantile,
    make_payload,
    normal_quantile,
    refresh,
    sobol_points,
    transform,
)


class TestSobol:
    def test_dim1_first_three_points(self):
        # unscrambled sequence starting at index 1
        np.testing.assert_array_equal(
            sobol_points(1, 3, seed=0).ravel(), [0.5, 0.75, 0.25]
        )

    def test_dim2_single_point_is_center(self):
        np.testing.assert_array_equal(sobol_points(2, 1, seed=0).ravel(), [0.5, 0.5])

    def test_matches_scipy_joe_kuo_reference(self):
        # independent direction-number oracle
        mine = sobol_points(16, 255, seed=0)
        ref = scipy_qmc.Sobol(d=16, scramble=False).random_base2(8)[1:]
        np.testing.assert_allclose(mine, ref, atol=0)

    @pytest.mark.parametrize("dim,n,seed", [(1, 7, 0), (3, 100, 5), (16, 33, 123)])
    def test_open_interval(self, dim, n, seed):
        pts = sobol_points(dim, n, seed)
        assert np.all(pts > 0.0) and np.all(pts < 1.0)

    def test_seed_offsets_give_different_points(self):
        a = sobol_points(4, 32, seed=0)
        b = sobol_points(4, 32, seed=1)
        assert not np.array_equal(a, b)

    def test_deterministic(self):
        a = sobol_points(5, 64, seed=9)
        b = sobol_points(5, 64, seed=9)
        np.testing.assert_array_equal(a, b)

    def test_unsupported_dimension(self):
        with pytest.raises(UnsupportedDimensionError):
            sobol_points(17, 4, 0)

    @pytest.mark.parametrize("k", [4, 7, 10])
    def test_low_discrepancy_mean(self, k):
        # dim=1 mean of 2^k points stays within 2^-k of 1/2
        pts = sobol_points(1, 2**k, seed=0)
        assert abs(pts.mean() - 0.5) <= 2.0**-k


class TestPayload:
    def test_antithetic_reflection(self):
        pay = make_payload(seed=3, dim=2, n=64, antithetic=True)
        u = pay.uniforms
        np.testing.assert_allclose(u[32:], 1.0 - u[:32], atol=0)

    def test_antithetic_needs_even_n(self):
        with pytest.raises(InvalidConfigError):
            make_payload(seed=0, dim=1, n=7, antithetic=True)

    def test_batch_1024_is_512_plus_reflections(self):
        pay = make_payload(seed=0, dim=1, n=1024, antithetic=True)
        assert pay.n == 1024
        sob = sobol_points(1, 512, seed=0)
        np.testing.assert_array_equal(pay.uniforms[:512], sob)
        np.testing.assert_array_equal(pay.uniforms[512:], 1.0 - sob)

    def test_same_seed_identical(self):
        a = make_payload(seed=11, dim=3, n=128, antithetic=True)
        b = make_payload(seed=11, dim=3, n=128, antithetic=True)
        np.testing.assert_array_equal(a.uniforms, b.uniforms)

    def test_refresh_at_boundary_increments_epoch(self):
        pay = make_payload(seed=1, dim=1, n=16, antithetic=True)
        bumped = refresh(pay, step=100, period=100)
        assert bumped.epoch == 1
        assert not np.array_equal(bumped.uniforms, pay.uniforms)

    def test_refresh_off_boundary_is_identity(self):
        pay = make_payload(seed=1, dim=1, n=16, antithetic=True)
        assert refresh(pay, step=57, period=100) is pay
        assert refresh(pay, step=0, period=100) is pay

    def test_refresh_replay_is_deterministic(self):
        pay = make_payload(seed=1, dim=2, n=32, antithetic=True)
        once = refresh(pay, 100, 100)
        twice = refresh(pay, 100, 100)
        np.testing.assert_array_equal(once.uniforms, twice.uniforms)

    def test_held_out_default_size(self):
        pay = held_out_batch(seed=97, dim=1)
        assert pay.n == 8192

    def test_held_out_disjoint_from_training_seed(self):
        train = make_payload(seed=7, dim=1, n=8192, antithetic=True)
        held = held_out_batch(seed=97, dim=1)
        assert not np.array_equal(train.uniforms, held.uniforms)

    def test_draw_cache_returns_same_array(self):
        pay = make_payload(seed=5, dim=1, n=64, antithetic=True)
        kinds = (NoiseKind("normal"),)
        assert pay.draws(kinds) is pay.draws(kinds)


class TestTransforms:
    @pytest.mark.parametrize("tag", ["normal", "logistic", "laplace"])
    def test_median_maps_to_location(self, tag):
        kind = NoiseKind(tag, location=1.5, scale=2.0)
        assert transform(0.5, kind) == pytest.approx(1.5, abs=1e-12)

    def test_logistic_09(self):
        assert transform(0.9, NoiseKind("logistic")) == pytest.approx(
            math.log(9.0), abs=1e-12
        )

    def test_normal_0975(self):
        # reference value from a high-precision quantile oracle
        assert transform(0.975, NoiseKind("normal")) == pytest.approx(
            1.959963984540054, abs=1e-9
        )

    def test_normal_quantile_against_scipy(self):
        u = np.linspace(1e-9, 1 - 1e-9, 20001)
        np.testing.assert_allclose(normal_quantile(u), ndtri(u), atol=1e-9)

    def test_domain_error(self):
        with pytest.raises(NumericalDomainError):
            transform(0.0, NoiseKind("normal"))
        with pytest.raises(NumericalDomainError):
            transform(1.0, NoiseKind("logistic"))

    def test_quantile_round_trips(self):
        u = np.linspace(1e-6, 1 - 1e-6, 4001)
        logistic_cdf = 1.0 / (1.0 + np.exp(-logistic_quantile(u)))
        np.testing.assert_allclose(logistic_cdf, u, atol=1e-7)
        x = laplace_quantile(u)
        laplace_cdf = np.where(x < 0, 0.5 * np.exp(x), 1.0 - 0.5 * np.exp(-x))
        np.testing.assert_allclose(laplace_cdf, u, atol=1e-7)
        from math import erfc

        normal_cdf = np.array([0.5 * erfc(-z / math.sqrt(2)) for z in normal_quantile(u)])
        np.testing.assert_allclose(normal_cdf, u, atol=1e-8)

    def test_scale_must_be_positive(self):
        with pytest.raises(InvalidConfigError):
            NoiseKind("normal", 0.0, 0.0)

    @pytest.mark.parametrize("tag", ["normal", "logistic", "laplace"])
    def test_antithetic_odd_function_mean_is_zero(self, tag):
        # odd g over symmetric location-0 draws cancels pairwise
        pay = make_payload(seed=21, dim=1, n=1024, antithetic=True)
        z = transform(pay.uniforms[:, 0], NoiseKind(tag))
        for g in (lambda x: x, lambda x: x**3, np.sinh):
            assert abs(float(np.mean(g(z)))) <= 1e-12
