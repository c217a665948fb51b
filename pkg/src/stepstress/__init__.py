"""Order-restricted Bayesian inference for simple step-stress tests with GE lifetimes.

Modules
-------
ge_dist      GE distribution, random streams, digamma.
cem          Cumulative-exposure model, censoring schemes, observed data.
posterior    Importance sampler, Bayes estimates, credible intervals.
mle          Profile-likelihood MLE and analytic log-likelihood derivatives.
lindley      Lindley approximation of posterior moments.
design       Stress-change time chosen by summed posterior CV.
simulation   Monte Carlo driver for the estimation tables.
gof          Kolmogorov-Smirnov check of a fitted model.
io           Dataset/config files, posterior-sample persistence, fixtures.
cli          Command-line entry point.
"""

__version__ = "0.1.0"

from .cem import (  # noqa: E402
    Complete,
    HybridI,
    HybridII,
    ObservedData,
    StepStressParams,
    TypeI,
    TypeII,
    apply_censoring,
    cem_cdf,
    cem_pdf,
    cem_sample,
)
from .errors import (  # noqa: E402
    CurvatureError,
    DegenerateDataError,
    DesignInfeasibleError,
    LowESSError,
    NumericalError,
    RootNotFoundError,
    StepStressError,
    UnstableDesignError,
    ValidationError,
)
from .ge_dist import GEParams, RngStream  # noqa: E402
from .mle import MleResult, fit_mle  # noqa: E402
from .posterior import (  # noqa: E402
    VAGUE_PRIOR,
    PosteriorSample,
    PriorHyper,
    bayes_estimate,
    credible_interval,
    draw_importance_sample,
)
