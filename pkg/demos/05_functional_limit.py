#!/usr/bin/env python3
"""Finite-dimensional comparison against the exactly sampled limit process.

The path t -> sqrt(L) F_L(t) converges in law to a Gaussian process with
covariance C(t1, t2) = int_0^(t1^t2) e^(-alpha(t1+t2-2s)) f_sigma(s) ds.
This demo samples that process exactly (eigendecomposition of C) and compares
covariances and the energy distance of an L=32 ensemble against it.
"""

import math

import numpy as np

from cable_clt import solver, stats
from cable_clt.model import BoundaryCondition as BC
from cable_clt.model import ModelParams, SigmaSpec

SIGMA = SigmaSpec.affine(1.0, 0.0)
TIMES = [0.25, 0.5, 1.0]
N = 2000

p = ModelParams(alpha=0.0, beta=1.0, length=32.0, horizon=1.0, bc=BC.NEUMANN,
                sigma=SIGMA)
grid = solver.Grid.build(p, dx=0.1)
ens = solver.run_ensemble(p, grid, TIMES, n_rep=N, master_seed=29, n_jobs=2)

limit = stats.sample_limit_process(p, SIGMA, TIMES, n=N, seed=31)
print("limiting covariance matrix:")
print(np.array2string(limit.covariance, precision=5))
print(f"(min eigenvalue {limit.min_eigenvalue:.3e}, "
      f"{limit.clipped_modes} clipped)\n")

comp = stats.fdd_compare(ens.f_l * math.sqrt(32.0), limit.samples,
                         times=TIMES, n_permutations=300, seed=0)
print("ensemble covariance:")
print(np.array2string(comp.cov_a, precision=5))
print("\nentrywise |difference| / pooled standard error:")
print(np.array2string(np.abs(comp.cov_a - comp.cov_b) / comp.cov_pooled_se,
                      precision=2))
print(f"\nmax covariance z-score: {comp.max_cov_z:.2f}")
print(f"energy distance {comp.energy_distance:.4e}, "
      f"permutation p-value {comp.p_value:.3f} ({comp.n_permutations} permutations)")
print("\n(at finite L the ensemble carries O(1/L) covariance bias and a"
      " residual skew,\n so modest p-values are expected at desk scale)")
