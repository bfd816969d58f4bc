"""Estimator contracts: distances, decay fits, limit sampling, moments."""

import math

import numpy as np
import pytest
from scipy.special import ndtri

from cable_clt import solver, stats
from cable_clt.model import (
    ConfigurationError,
    DegenerateSampleError,
    ModelParams,
    SigmaSpec,
)


def params(alpha=0.0, beta=1.0, horizon=2.0):
    return ModelParams(alpha=alpha, beta=beta, length=4.0, horizon=horizon,
                       sigma=SigmaSpec.affine(0.0, 1.0))


class TestStandardize:
    def test_constant_sample_rejected(self):
        with pytest.raises(DegenerateSampleError):
            stats.standardize(np.full(500, 2.5))

    def test_too_few_samples(self):
        with pytest.raises(ConfigurationError):
            stats.standardize(np.arange(50.0))

    def test_exact_normalization(self):
        rng = np.random.default_rng(0)
        out = stats.standardize(rng.standard_normal(5000) * 3.0 + 2.0)
        assert out.values.mean() == pytest.approx(0.0, abs=1e-12)
        assert out.values.var(ddof=1) == pytest.approx(1.0, rel=1e-12)

    def test_jackknife_se_close_to_gaussian_formula(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal(20_000) * 1.7
        out = stats.standardize(x)
        gauss_se = out.variance * math.sqrt(2.0 / (x.size - 1))
        assert out.variance_std_error == pytest.approx(gauss_se, rel=0.1)


class TestKsDistance:
    def test_ideal_quantile_spacing(self):
        n = 1000
        x = ndtri((np.arange(1, n + 1) - 0.5) / n)
        assert stats.ks_distance(x).value == pytest.approx(0.5 / n, rel=1e-6)

    def test_point_mass_at_zero(self):
        assert stats.ks_distance(np.zeros(200)).value == pytest.approx(0.5)

    def test_shifted_normal(self):
        rng = np.random.default_rng(2)
        x = rng.standard_normal(200_000) + 1.0
        from scipy.special import ndtr
        expected = ndtr(0.5) - ndtr(-0.5)
        assert stats.ks_distance(x).value == pytest.approx(expected, abs=6e-3)

    def test_needs_samples(self):
        with pytest.raises(ConfigurationError):
            stats.ks_distance(np.zeros(10))


class TestTvHistogram:
    def test_default_bin_count(self):
        rng = np.random.default_rng(3)
        est = stats.tv_histogram(rng.standard_normal(10_000))
        assert est.bins == 22

    def test_null_level(self):
        rng = np.random.default_rng(4)
        est = stats.tv_histogram(rng.standard_normal(10_000), bins=22)
        assert est.value <= 0.05

    def test_disjoint_support(self):
        rng = np.random.default_rng(5)
        est = stats.tv_histogram(rng.uniform(10, 11, size=5000), bins=20)
        assert est.value >= 1.0 - 1.0 / est.bins - 1e-12

    def test_ks_below_tv_plus_slack(self):
        rng = np.random.default_rng(6)
        for shift in (0.0, 0.3, 1.5):
            x = rng.standard_normal(5000) + shift
            ks = stats.ks_distance(x)
            tv = stats.tv_histogram(x)
            assert ks.value <= tv.value + tv.bin_slack

    def test_preconditions(self):
        rng = np.random.default_rng(7)
        with pytest.raises(ConfigurationError):
            stats.tv_histogram(rng.standard_normal(500))
        with pytest.raises(ConfigurationError):
            stats.tv_histogram(rng.standard_normal(2000), bins=5)


class TestDecayFit:
    def test_recovers_planted_half(self):
        pairs = [(L, 2.0 * L**-0.5) for L in (4, 16, 64, 256)]
        fit = stats.fit_decay_exponent(pairs)
        assert fit.decay_exponent == pytest.approx(0.5, abs=1e-12)
        assert fit.residual_norm == pytest.approx(0.0, abs=1e-12)

    def test_recovers_planted_one(self):
        fit = stats.fit_decay_exponent([(L, 3.0 / L) for L in (4, 16, 64)])
        assert fit.decay_exponent == pytest.approx(1.0, abs=1e-12)

    def test_preconditions(self):
        with pytest.raises(ConfigurationError):
            stats.fit_decay_exponent([(4, 1.0), (4, 0.9), (4, 0.8)])
        with pytest.raises(ValueError):
            stats.fit_decay_exponent([(4, 1.0), (16, 0.0), (64, 0.1)])


class TestLimitProcess:
    def test_brownian_case(self):
        p = params()
        lp = stats.sample_limit_process(p, SigmaSpec.affine(0.0, 1.0),
                                        [0.5, 1.0, 2.0], n=20_000, seed=3)
        expected = np.minimum.outer([0.5, 1.0, 2.0], [0.5, 1.0, 2.0])
        assert np.allclose(lp.covariance, expected, atol=1e-8)
        sample_var = lp.samples.var(axis=0, ddof=1)
        se = expected.diagonal() * math.sqrt(2.0 / 20_000)
        assert np.all(np.abs(sample_var - expected.diagonal()) <= 3 * se)

    def test_single_time_is_univariate_gaussian(self):
        p = params(alpha=0.2)
        lp = stats.sample_limit_process(p, SigmaSpec.affine(0.0, 1.0),
                                        [1.0], n=50_000, seed=4)
        c = lp.covariance[0, 0]
        x = lp.samples[:, 0]
        assert abs(x.mean()) <= 3 * math.sqrt(c / x.size)
        assert abs(x.var(ddof=1) - c) <= 3 * c * math.sqrt(2.0 / x.size)

    def test_sampler_self_consistency(self):
        p = ModelParams(alpha=0.5, beta=1.0, length=4.0, horizon=2.0,
                        sigma=SigmaSpec.affine(1.0, 0.0))
        lp = stats.sample_limit_process(p, SigmaSpec.affine(1.0, 0.0),
                                        [0.5, 1.0], n=40_000, seed=5)
        emp = np.cov(lp.samples.T)
        se = np.sqrt(np.outer(lp.covariance.diagonal(),
                              lp.covariance.diagonal()) * 2.0 / 40_000)
        assert np.all(np.abs(emp - lp.covariance) <= 3.5 * se)

    @pytest.mark.slow
    def test_covariance_error_shrinks_like_sqrt_n(self):
        p = params()
        errs = []
        for n in (1000, 4000, 16_000):
            lp = stats.sample_limit_process(p, SigmaSpec.affine(0.0, 1.0),
                                            [0.5, 1.0, 2.0], n=n, seed=6)
            emp = np.cov(lp.samples.T)
            errs.append(np.abs(emp - lp.covariance).max() * math.sqrt(n))
        # sqrt(n)-scaled errors stay bounded rather than growing 4x per step
        assert max(errs) <= 10 * min(errs)

    def test_times_validated(self):
        p = params()
        with pytest.raises(ConfigurationError):
            stats.sample_limit_process(p, SigmaSpec.affine(0.0, 1.0),
                                       [0.5, 3.0], n=100, seed=0)


class TestFddCompare:
    def _draws(self, seed, n=1500, shift=0.0):
        p = params()
        lp = stats.sample_limit_process(p, SigmaSpec.affine(0.0, 1.0),
                                        [0.5, 1.0, 2.0], n=n, seed=seed)
        return lp.samples + shift

    def test_null_p_value_not_small(self):
        a = self._draws(10)
        b = self._draws(11)
        cmp_ = stats.fdd_compare(a, b, n_permutations=300, seed=0)
        assert cmp_.p_value > 0.01
        assert cmp_.max_cov_z <= 4.0

    def test_detects_shift(self):
        a = self._draws(12)
        b = self._draws(13, shift=0.3)
        cmp_ = stats.fdd_compare(a, b, n_permutations=300, seed=0)
        assert cmp_.p_value <= 0.01

    def test_deterministic(self):
        a = self._draws(14)
        b = self._draws(15)
        r1 = stats.fdd_compare(a, b, n_permutations=100, seed=5)
        r2 = stats.fdd_compare(a, b, n_permutations=100, seed=5)
        assert r1.p_value == r2.p_value
        assert r1.energy_distance == r2.energy_distance

    def test_mismatched_width_rejected(self):
        with pytest.raises(ConfigurationError):
            stats.fdd_compare(np.zeros((1500, 3)), np.zeros((1500, 2)))

    def test_needs_enough_samples(self):
        with pytest.raises(ConfigurationError):
            stats.fdd_compare(np.zeros((100, 2)), np.zeros((1500, 2)))

    @pytest.mark.slow
    def test_null_rejection_rate(self):
        # permutation p-values are honest: level-0.05 rejections near 5%
        rejects = 0
        reps = 60
        for i in range(reps):
            a = self._draws(1000 + 2 * i, n=1000)
            b = self._draws(1001 + 2 * i, n=1000)
            cmp_ = stats.fdd_compare(a, b, n_permutations=200, seed=i)
            rejects += cmp_.p_value <= 0.05
        assert rejects / reps <= 0.15


class TestIncrementMoment:
    def _ensemble(self, sigma1=0.0, sigma0=1.0, n_rep=400):
        p = ModelParams(alpha=0.0, beta=1.0, length=8.0, horizon=1.0,
                        sigma=SigmaSpec.affine(sigma1, sigma0))
        g = solver.Grid.build(p, dx=0.1)
        return solver.run_ensemble(p, g, [0.5, 0.7], n_rep=n_rep, master_seed=21)

    def test_noiseless_increments_vanish(self):
        ens = self._ensemble(sigma0=0.0)
        mom = stats.increment_moment(ens, 0.5, 0.7, k=2)
        assert mom.value <= 1e-3

    def test_additive_second_moment_scale(self):
        ens = self._ensemble(n_rep=2000)
        mom = stats.increment_moment(ens, 0.5, 0.7, k=2)
        expected = math.sqrt(0.2 / 8.0)  # sqrt(dt / L) for unit additive noise
        assert mom.value == pytest.approx(expected, rel=0.1)
        assert mom.std_error > 0

    def test_deterministic_given_seed(self):
        ens = self._ensemble()
        a = stats.increment_moment(ens, 0.5, 0.7, k=2, seed=3)
        b = stats.increment_moment(ens, 0.5, 0.7, k=2, seed=3)
        assert a == b

    def test_preconditions(self):
        ens = self._ensemble()
        with pytest.raises(ConfigurationError):
            stats.increment_moment(ens, 0.5, 0.9, k=2)  # 0.9 not sampled
        with pytest.raises(ConfigurationError):
            stats.increment_moment(ens, 0.5, 0.7, k=3)
        with pytest.raises(ConfigurationError):
            stats.increment_moment(ens, 0.7, 0.5, k=2)
