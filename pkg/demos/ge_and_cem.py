"""Generalized exponential lifetimes under a simple step-stress test.

Units start at the low stress level and switch to the high level at
``tau1``.  The cumulative exposure model carries the accumulated damage
across the switch, so the lifetime CDF stays continuous while the hazard
jumps.  This script samples one test, applies each censoring scheme and
prints what an experimenter would actually observe.
"""

import numpy as np

from stepstress.cem import (
    Complete,
    HybridI,
    HybridII,
    StepStressParams,
    TypeI,
    TypeII,
    apply_censoring,
    cem_cdf,
    cem_pdf,
    cem_sample,
)
from stepstress.ge_dist import GEParams, RngStream, ge_mean

truth = StepStressParams(alpha=1.5, theta1=0.1, theta2=0.2, tau1=7.0)
print("mean life at stress 1:", round(ge_mean(GEParams(1.5, 0.1)), 3))
print("mean life at stress 2:", round(ge_mean(GEParams(1.5, 0.2)), 3))

# The CDF is continuous at tau1 but the density is not.
eps = 1e-9
print("F(tau1 -/+):", cem_cdf(truth, 7.0 - eps), cem_cdf(truth, 7.0 + eps))
print("f(tau1 -/+):", cem_pdf(truth, 7.0 - eps), cem_pdf(truth, 7.0 + eps))

full = cem_sample(truth, 20, RngStream(2024))
print("\nall 20 failure times:", np.round(full, 2))

for spec in (Complete(), TypeI(12.0), TypeII(15), HybridI(15, 12.0), HybridII(15, 12.0)):
    d = apply_censoring(full, 20, truth.tau1, spec)
    print(f"{spec!s:32s} n*={d.n_star:2d} (stage 1: {d.n1_star:2d}, stage 2: {d.n2_star:2d}) "
          f"stops at {d.tau_star:.2f}")
