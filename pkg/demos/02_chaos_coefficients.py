#!/usr/bin/env python3
"""Chaos coefficients f_k, the limit f_sigma, and the covariance integral.

For affine noise the k-fold simplex integrals collapse to one-dimensional
integrals; a sorted-uniform Monte Carlo oracle confirms the reduction.  Their
sum f_sigma(t) feeds the limiting covariance of sqrt(L) F_L.
"""

import math

from cable_clt import chaos
from cable_clt.model import ModelParams, SigmaSpec

p = ModelParams(alpha=0.5, beta=1.0, length=4.0, horizon=4.0,
                sigma=SigmaSpec.affine(1.0, 0.5))
S1, S0, T_EVAL = 1.0, 0.5, 0.8

print(f"chaos coefficients at t={T_EVAL}, sigma(u) = {S1} u + {S0}, "
      f"alpha={p.alpha}, beta={p.beta}\n")
print("  k   closed form      Monte Carlo oracle (n=200000)")
for k in range(1, 6):
    closed = chaos.f_k_closed(p, S1, S0, k=k, t=T_EVAL)
    est = chaos.f_k_oracle(p, S1, S0, k=k, t=T_EVAL, n_samples=200_000, seed=k)
    print(f"  {k}   {closed:.8f}     {est.value:.8f} +- {est.std_error:.8f}")

cc = chaos.f_sigma(p, S1, S0, t=T_EVAL, tol=1e-10)
print(f"\nf_sigma({T_EVAL}) = {cc.f_sigma:.10f}"
      f"  (k_max={cc.k_max}, tail bound {cc.tail_bound:.2e})")
print(f"analytic upper bound: {cc.upper_bound:.10f}")

print("\nmultiplicative unit case reproduces the closed series sum"
      " 2 e^(t/4) Phi(sqrt(t/2)):")
p0 = ModelParams(alpha=0.0, beta=1.0, length=4.0, horizon=4.0,
                 sigma=SigmaSpec.affine(1.0, 0.0))
for t in (0.25, 1.0, 2.0, 4.0):
    cc = chaos.f_sigma(p0, 1.0, 0.0, t=t, tol=1e-10)
    print(f"  t={t:<5g} f_sigma={cc.f_sigma:.10f}"
          f"  closed={chaos.half_gamma_series(t):.10f}"
          f"  gap={abs(cc.f_sigma - chaos.half_gamma_series(t)):.1e}")

print("\nlimiting covariance of sqrt(L) F_L (additive case has closed form):")
pa = ModelParams(alpha=0.5, beta=1.0, length=4.0, horizon=2.0,
                 sigma=SigmaSpec.affine(0.0, 1.0))
for t in (0.5, 1.0, 2.0):
    v = chaos.limit_covariance(pa, SigmaSpec.affine(0.0, 1.0), t, t)
    exact = (1.0 - math.exp(-2.0 * pa.alpha * t)) / (2.0 * pa.alpha)
    print(f"  Var limit at t={t}: {v:.10f}   closed form {exact:.10f}")
