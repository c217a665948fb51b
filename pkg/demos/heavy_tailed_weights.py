"""Why importance sampling needs a large N on small samples.

As theta2 goes to zero the posterior decays only logarithmically, while
the gamma proposal for theta2 vanishes like a power.  The weights then
have infinite variance: the effective sample size grows roughly like the
square root of N instead of linearly, and estimates from small samples
are pulled toward the bulk of the proposal.  This script shows the ESS
growth on a small dataset and on the solar data.
"""

from stepstress.cem import Complete, StepStressParams, apply_censoring, cem_sample
from stepstress.ge_dist import RngStream
from stepstress.io import load_fixture
from stepstress.posterior import VAGUE_PRIOR, bayes_estimate, draw_importance_sample

small = apply_censoring(cem_sample(StepStressParams(1.5, 0.1, 0.2, 7.0), 12, RngStream(5)), 12, 7.0,
                        Complete())
for label, data in (("12 simulated units", small), ("solar data", load_fixture("solar").observed())):
    print(label)
    for N in (2_000, 8_000, 32_000, 128_000, 512_000):
        s = draw_importance_sample(data, VAGUE_PRIOR, N, RngStream(0))
        print(f"  N={N:7d}  ESS={s.ess:9.1f}  ESS/N={s.ess / N:.4f}  "
              f"E[alpha]={bayes_estimate(s, 'alpha'):.4f}")
