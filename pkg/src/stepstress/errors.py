"""Exception hierarchy shared by the estimation modules and the CLI."""


class StepStressError(Exception):
    """Base class; ``exit_code`` is what the CLI returns for it."""

    exit_code = 4


class ValidationError(StepStressError, ValueError):
    exit_code = 2


class DegenerateDataError(StepStressError):
    """No observed failures (or a data layout that makes the target improper)."""

    exit_code = 3


class NumericalError(StepStressError):
    exit_code = 4


class RootNotFoundError(NumericalError):
    pass


class LowESSError(NumericalError):
    """Importance weights collapsed onto too few draws for an interval."""


class CurvatureError(NumericalError):
    """Negative Hessian of the log-likelihood is singular or indefinite."""


class UnstableDesignError(NumericalError):
    pass


class DesignInfeasibleError(NumericalError):
    """No candidate stress-change time produced a stable criterion."""

    exit_code = 7
