"""Solver contracts: scheme accuracy, determinism, centering, moments."""

import math

import numpy as np
import pytest

from cable_clt import chaos, solver, stats
from cable_clt.model import (
    BoundaryCondition as BC,
    ConfigurationError,
    ModelParams,
    NumericalFailureError,
    SigmaSpec,
)


def params(alpha=0.5, beta=1.0, length=16.0, horizon=1.0, bc=BC.NEUMANN,
           sigma1=0.0, sigma0=1.0):
    return ModelParams(alpha=alpha, beta=beta, length=length, horizon=horizon,
                       bc=bc, sigma=SigmaSpec.affine(sigma1, sigma0))


class TestGrid:
    def test_build_respects_stability(self):
        p = params(beta=2.0, length=7.3)
        g = solver.Grid.build(p, dx=0.1)
        assert g.stability_ratio <= 0.25 + 1e-12
        assert g.dx <= 0.1
        assert g.n_space >= 8
        g.validate(p)

    def test_unstable_grid_rejected(self):
        p = params()
        g = solver.Grid(n_space=16, n_time=2, length=16.0, horizon=1.0,
                        stability_ratio=0.5)  # beta dt / dx^2 = 0.5
        with pytest.raises(ConfigurationError):
            solver.simulate_path(p, g, [1.0], seed=0)

    def test_mismatched_extent_rejected(self):
        p = params(length=16.0)
        g = solver.Grid.build(params(length=8.0), dx=0.1)
        with pytest.raises(ConfigurationError):
            g.validate(p)


class TestSimulatePath:
    def test_deterministic_decay_without_noise(self):
        p = params(alpha=1.0, length=4.0, sigma0=0.0)
        g = solver.Grid.build(p, dx=0.05)
        tr = solver.simulate_path(p, g, [0.5, 1.0], seed=1)
        tol = 5 * (g.dt + g.dx**2)
        assert np.abs(tr.field[0] - math.exp(-0.5)).max() < tol
        assert np.abs(tr.field[1] - math.exp(-1.0)).max() < tol
        assert np.abs(tr.f_l).max() < tol

    def test_output_time_snapping(self):
        p = params(length=4.0)
        g = solver.Grid.build(p, dx=0.1)
        tr = solver.simulate_path(p, g, [0.0, 0.5, 1.0], seed=2)
        assert tr.times[0] == 0.0
        assert tr.f_l[0] == 0.0  # centered initial condition
        assert np.allclose(tr.times, [0.0, 0.5, 1.0], atol=g.dt / 2)

    def test_invalid_output_times(self):
        p = params(length=4.0)
        g = solver.Grid.build(p, dx=0.1)
        with pytest.raises(ConfigurationError):
            solver.simulate_path(p, g, [1.0, 0.5], seed=0)
        with pytest.raises(ConfigurationError):
            solver.simulate_path(p, g, [0.5, 2.0], seed=0)
        with pytest.raises(ConfigurationError):
            solver.simulate_path(p, g, [], seed=0)

    def test_blow_up_reported_with_step(self):
        p = params(length=4.0, horizon=1.0, sigma1=80.0, sigma0=0.0)
        g = solver.Grid.build(p, dx=0.1)
        with pytest.raises(NumericalFailureError) as err:
            solver.run_ensemble(p, g, [1.0], n_rep=8, master_seed=3)
        assert err.value.step is not None
        assert err.value.replicate is not None


class TestEnsemble:
    def test_bit_identical_reruns(self):
        p = params(length=8.0)
        g = solver.Grid.build(p, dx=0.1)
        a = solver.run_ensemble(p, g, [0.5, 1.0], n_rep=50, master_seed=11)
        b = solver.run_ensemble(p, g, [0.5, 1.0], n_rep=50, master_seed=11)
        assert np.array_equal(a.f_l, b.f_l)

    def test_bit_identical_across_workers(self):
        p = params(length=8.0)
        g = solver.Grid.build(p, dx=0.1)
        a = solver.run_ensemble(p, g, [1.0], n_rep=120, master_seed=11, n_jobs=1)
        b = solver.run_ensemble(p, g, [1.0], n_rep=120, master_seed=11, n_jobs=2)
        assert np.array_equal(a.f_l, b.f_l)

    def test_replicate_streams_are_prefix_stable(self):
        p = params(length=8.0)
        g = solver.Grid.build(p, dx=0.1)
        small = solver.run_ensemble(p, g, [1.0], n_rep=30, master_seed=11)
        big = solver.run_ensemble(p, g, [1.0], n_rep=90, master_seed=11)
        assert np.array_equal(big.f_l[:30], small.f_l)

    def test_distinct_replicates_differ(self):
        p = params(length=8.0)
        g = solver.Grid.build(p, dx=0.1)
        ens = solver.run_ensemble(p, g, [1.0], n_rep=2, master_seed=4)
        assert ens.f_l[0, 0] != ens.f_l[1, 0]

    def test_needs_two_replicates(self):
        p = params(length=8.0)
        g = solver.Grid.build(p, dx=0.1)
        with pytest.raises(ConfigurationError):
            solver.run_ensemble(p, g, [1.0], n_rep=1, master_seed=4)

    @pytest.mark.parametrize("bc", list(BC))
    def test_centering_kills_the_mean(self, bc):
        p = params(alpha=0.3, length=8.0, horizon=0.5, bc=bc,
                   sigma1=1.0, sigma0=0.0)
        g = solver.Grid.build(p, dx=0.1)
        ens = solver.run_ensemble(p, g, [0.2, 0.5], n_rep=3000, master_seed=5)
        m = ens.f_l.mean(axis=0)
        se = ens.f_l.std(axis=0, ddof=1) / math.sqrt(ens.n_rep)
        assert np.all(np.abs(m) <= 3 * se)

    @pytest.mark.slow
    def test_additive_variance_matches_closed_form(self):
        # Var(sqrt(L) F_L(1)) -> (1 - e^{-2 alpha}) / (2 alpha) for sigma=(0,1)
        p = params(alpha=0.5, length=16.0)
        g = solver.Grid.build(p, dx=0.1)
        ens = solver.run_ensemble(p, g, [1.0], n_rep=4000, master_seed=123,
                                  n_jobs=2)
        std = stats.standardize(ens.f_l[:, 0] * math.sqrt(16.0))
        expected = 1.0 - math.exp(-1.0)
        assert abs(std.variance - expected) <= 3 * std.variance_std_error

    @pytest.mark.slow
    def test_additive_averages_are_gaussian(self):
        from scipy.stats import kurtosis, skew
        p = params(alpha=0.5, length=8.0)
        g = solver.Grid.build(p, dx=0.1)
        ens = solver.run_ensemble(p, g, [1.0], n_rep=10_000, master_seed=77,
                                  n_jobs=2)
        x = ens.f_l[:, 0]
        n = x.size
        assert abs(x.mean()) <= 3 * x.std(ddof=1) / math.sqrt(n)
        assert abs(skew(x)) <= 3 * math.sqrt(6.0 / n)
        assert abs(kurtosis(x)) <= 3 * math.sqrt(24.0 / n)

    @pytest.mark.slow
    def test_multiplicative_variance_tracks_chaos_limit(self):
        p = params(alpha=0.0, length=32.0, sigma1=1.0, sigma0=0.0,
                   horizon=0.5)
        g = solver.Grid.build(p, dx=0.1)
        ens = solver.run_ensemble(p, g, [0.5], n_rep=4000, master_seed=9,
                                  n_jobs=2)
        std = stats.standardize(ens.f_l[:, 0] * math.sqrt(32.0))
        limit = chaos.limit_covariance(p, SigmaSpec.affine(1.0, 0.0), 0.5, 0.5)
        allowance = 2.0 * limit / 32.0
        assert abs(std.variance - limit) <= 3 * std.variance_std_error + allowance

    @pytest.mark.slow
    def test_moment_boundedness_across_lengths(self):
        # ||u(t, x)||_4 must not grow with L: log-moment slope within +-0.05
        norms = []
        lengths = [1.0, 4.0, 16.0, 64.0]
        for L in lengths:
            p = params(alpha=0.0, length=L, horizon=1.0, sigma1=1.0, sigma0=0.0)
            g = solver.Grid.build(p, dx=0.1)
            trs = solver.run_trajectories(p, g, [1.0], n_rep=3000,
                                          master_seed=31, n_jobs=2)
            mid = g.n_space // 2
            vals = np.array([tr.field[0, mid] for tr in trs])
            norms.append(float(np.mean(vals**4) ** 0.25))
        x = np.log(lengths)
        y = np.log(norms)
        slope = float(np.polyfit(x, y, 1)[0])
        assert abs(slope) <= 0.05

    @pytest.mark.slow
    def test_grid_convergence_of_variance(self):
        # halving dx (and re-meeting stability) moves the variance estimate
        # by less than the n=4000 Monte Carlo standard error
        p = params(alpha=0.0, length=8.0, sigma1=1.0, sigma0=0.0)
        n_big = 12_000
        ests = []
        for dx in (0.1, 0.05):
            g = solver.Grid.build(p, dx=dx)
            ens = solver.run_ensemble(p, g, [1.0], n_rep=n_big,
                                      master_seed=61 if dx == 0.1 else 62,
                                      n_jobs=2)
            std = stats.standardize(ens.f_l[:, 0] * math.sqrt(8.0))
            ests.append((std.variance, std.variance_std_error))
        se_at_4000 = ests[0][1] * math.sqrt(n_big / 4000.0)
        assert abs(ests[0][0] - ests[1][0]) < se_at_4000


class TestMeanField:
    def test_additive_neumann(self):
        p = params(alpha=1.0, length=4.0)
        g = solver.Grid.build(p, dx=0.1)
        trs = solver.run_trajectories(p, g, [1.0], n_rep=1200, master_seed=9,
                                      n_jobs=2)
        rep = solver.mean_field_check(trs, p, 1.0, 2.0)
        assert abs(rep.discrepancy) <= 3 * rep.std_error

    def test_noiseless_discrepancy_is_discretization_error(self):
        p = params(alpha=1.0, length=4.0, sigma0=0.0)
        g = solver.Grid.build(p, dx=0.1)
        trs = solver.run_trajectories(p, g, [1.0], n_rep=1000, master_seed=9)
        rep = solver.mean_field_check(trs, p, 1.0, 2.0)
        assert abs(rep.discrepancy) <= 5 * (g.dt + g.dx**2)
        assert rep.std_error <= 1e-15  # identical paths up to mean rounding

    @pytest.mark.slow
    def test_dirichlet_near_boundary(self):
        p = params(alpha=0.0, length=4.0, horizon=0.2, bc=BC.DIRICHLET,
                   sigma1=1.0, sigma0=0.0)
        g = solver.Grid.build(p, dx=0.05)
        trs = solver.run_trajectories(p, g, [0.2], n_rep=4000, master_seed=13,
                                      n_jobs=2)
        rep = solver.mean_field_check(trs, p, 0.2, 0.3)
        assert abs(rep.discrepancy) <= 3 * rep.std_error + 5 * (g.dt + g.dx**2)

    def test_needs_enough_replicates(self):
        p = params(length=4.0)
        g = solver.Grid.build(p, dx=0.1)
        trs = solver.run_trajectories(p, g, [1.0], n_rep=10, master_seed=1)
        with pytest.raises(ConfigurationError):
            solver.mean_field_check(trs, p, 1.0, 2.0)
