"""Order-restricted Bayesian analysis of the solar lighting data.

The posterior over (alpha, theta2, beta), with theta1 = beta * theta2 and
0 < beta < 1, has no closed form.  Importance sampling draws beta from a
uniform, theta2 and alpha from conditional gamma kernels, and corrects
with the remaining likelihood factor.  The weights are heavy tailed, so
it is worth looking at the effective sample size before trusting any
interval.
"""

from stepstress.ge_dist import RngStream
from stepstress.io import load_fixture
from stepstress.posterior import VAGUE_PRIOR, bayes_estimate, credible_interval, draw_importance_sample

data = load_fixture("solar").observed()
print(f"n={data.n}, observed {data.n_star} failures ({data.n1_star} before the stress change), "
      f"stopped at {data.tau_star}")

for N in (15_000, 200_000):
    s = draw_importance_sample(data, VAGUE_PRIOR, N, RngStream(0))
    est = {p: bayes_estimate(s, p) for p in ("alpha", "theta1", "theta2", "beta")}
    print(f"\nN={N}: ESS {s.ess:.0f}")
    print("  posterior means:", {k: round(v, 4) for k, v in est.items()})
    for kind in ("symmetric", "hpd"):
        ci = credible_interval(s, "theta1", 0.05, kind)
        print(f"  95% {kind:9s} interval for theta1: ({ci.lower:.4f}, {ci.upper:.4f})")

# Any function of the parameters can be estimated from the same draws,
# for example the probability that a unit survives 3 time units at stress 1.
s = draw_importance_sample(data, VAGUE_PRIOR, 200_000, RngStream(1))
surv = bayes_estimate(s, lambda b, t2, a: 1 - (1 - __import__("numpy").exp(-b * t2 * 3.0)) ** a)
print(f"\nposterior mean of P(T > 3) at stress 1: {surv:.4f}")
