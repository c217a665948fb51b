"""Maximum likelihood and Lindley's approximation for posterior moments.

The MLE profiles the likelihood over beta on a grid and polishes with
Newton steps on all three parameters.  Lindley's expansion around the MLE
uses the second and third derivatives of the log-likelihood to approximate
posterior means and variances without any sampling, which is what makes
the design search cheap.  Here both are compared with a large importance
sample on one simulated dataset.
"""

import numpy as np

from stepstress.cem import Complete, StepStressParams, apply_censoring, cem_sample
from stepstress.ge_dist import RngStream
from stepstress.lindley import build_workspace, posterior_moment, posterior_variance
from stepstress.mle import fit_mle
from stepstress.posterior import VAGUE_PRIOR, bayes_estimate, draw_importance_sample

truth = StepStressParams(1.5, 0.1, 0.2, 7.0)
data = apply_censoring(cem_sample(truth, 100, RngStream(3)), 100, 7.0, Complete())

m = fit_mle(data)
print(f"MLE: alpha={m.alpha_hat:.4f} theta1={m.theta1_hat:.4f} theta2={m.theta2_hat:.4f} "
      f"beta={m.beta_hat:.4f} (boundary: {m.boundary})")

ws = build_workspace(m, data, VAGUE_PRIOR)
s = draw_importance_sample(data, VAGUE_PRIOR, 400_000, RngStream(4))
print(f"importance sample ESS {s.ess:.0f}\n")
print(f"{'':8s}{'Lindley mean':>14s}{'IS mean':>10s}{'Lindley sd':>12s}{'IS sd':>8s}")
for p in ("alpha", "theta1", "theta2"):
    mean_is = bayes_estimate(s, p)
    sd_is = np.sqrt(bayes_estimate(s, f"{p}**2") - mean_is**2)
    mom = posterior_moment(ws, p)
    print(f"{p:8s}{mom.mean:14.4f}{mean_is:10.4f}{np.sqrt(posterior_variance(ws, p)):12.4f}{sd_is:8.4f}")
