"""Cumulative-exposure step-stress model with GE lifetimes, and censoring.

Under stress S1 (up to ``tau1``) units have GE(alpha, theta1) lifetimes;
after the change the remaining life is GE(alpha, theta2) evaluated at the
exposure-equivalent time ``t - tau1 + beta*tau1`` with ``beta = theta1/theta2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import ValidationError
from .ge_dist import GEParams, RngStream, ge_cdf, ge_pdf, log1mexp

__all__ = [
    "StepStressParams",
    "Complete",
    "TypeI",
    "TypeII",
    "HybridI",
    "HybridII",
    "CensoringSpec",
    "ObservedData",
    "cem_cdf",
    "cem_pdf",
    "cem_sample",
    "apply_censoring",
    "termination_time",
    "exposure",
]


@dataclass(frozen=True)
class StepStressParams:
    alpha: float
    theta1: float
    theta2: float
    tau1: float

    def __post_init__(self):
        if not (self.alpha > 0 and self.theta1 > 0 and self.theta2 > 0 and self.tau1 > 0):
            raise ValidationError("alpha, theta1, theta2 and tau1 must all be positive")
        if not self.theta1 < self.theta2:
            raise ValidationError(
                f"order restriction theta1 < theta2 violated ({self.theta1} >= {self.theta2})"
            )

    @property
    def beta(self) -> float:
        return self.theta1 / self.theta2

    @classmethod
    def from_beta(cls, alpha, theta2, beta, tau1) -> StepStressParams:
        return cls(alpha, beta * theta2, theta2, tau1)


@dataclass(frozen=True)
class Complete:
    name = "complete"


@dataclass(frozen=True)
class TypeI:
    tau2: float
    name = "type1"


@dataclass(frozen=True)
class TypeII:
    r: int
    name = "type2"


@dataclass(frozen=True)
class HybridI:
    r: int
    tau2: float
    name = "hybrid1"


@dataclass(frozen=True)
class HybridII:
    r: int
    tau2: float
    name = "hybrid2"


CensoringSpec = Union[Complete, TypeI, TypeII, HybridI, HybridII]


@dataclass(frozen=True, eq=False)
class ObservedData:
    """Observed failure times of a (possibly censored) simple step-stress test.

    ``n1_star`` counts failures at or before ``tau1``; ``n - n_star`` units
    survive past ``tau_star``.
    """

    times: np.ndarray
    n: int
    n1_star: int
    n2_star: int
    tau_star: float
    tau1: float
    spec: CensoringSpec = field(default_factory=Complete)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        object.__setattr__(self, "times", t)
        t.setflags(write=False)
        if t.ndim != 1:
            raise ValidationError("times must be one-dimensional")
        if np.any(np.diff(t) <= 0):
            raise ValidationError("failure times must be strictly increasing")
        if t.size and t[0] <= 0:
            raise ValidationError("failure times must be positive")
        if self.n1_star + self.n2_star != t.size:
            raise ValidationError("n1_star + n2_star must equal the number of times")
        if t.size > self.n:
            raise ValidationError("more observed failures than units on test")
        if int(np.sum(t <= self.tau1)) != self.n1_star:
            raise ValidationError("n1_star disagrees with the times at or before tau1")
        if t.size and t[-1] > self.tau_star:
            raise ValidationError("observed failure after the termination time")
        if isinstance(self.spec, Complete) and t.size != self.n:
            raise ValidationError("complete data must contain all n failures")

    @property
    def n_star(self) -> int:
        return int(self.times.size)

    @property
    def n_censored(self) -> int:
        return self.n - self.n_star

    @property
    def degenerate(self) -> bool:
        return self.n_star == 0

    @property
    def stage1(self) -> np.ndarray:
        return self.times[: self.n1_star]

    @property
    def stage2(self) -> np.ndarray:
        return self.times[self.n1_star :]

    @classmethod
    def complete(cls, times, tau1) -> ObservedData:
        t = np.sort(np.asarray(times, dtype=float))
        return apply_censoring(t, t.size, tau1, Complete())


def exposure(t, beta, tau1):
    """Stress-1-equivalent exposure scaled to stress 2: ``beta*t`` or ``t - tau1 + beta*tau1``."""
    t = np.asarray(t, dtype=float)
    return np.where(t <= tau1, beta * t, t - tau1 + beta * tau1)


def _rate_exposure(p: StepStressParams, t):
    """``theta * exposure``: ``theta1*t`` up to ``tau1``, then ``theta2*(t - tau1) + theta1*tau1``."""
    return np.where(t <= p.tau1, p.theta1 * t, p.theta2 * (t - p.tau1) + p.theta1 * p.tau1)


def cem_cdf(p: StepStressParams, t):
    t = np.asarray(t, dtype=float)
    x = _rate_exposure(p, np.where(t > 0, t, 1.0))
    out = np.where(t > 0, np.exp(p.alpha * log1mexp(x)), 0.0)
    out = np.clip(out, 0.0, 1.0)
    return out[()] if out.ndim == 0 else out


def cem_pdf(p: StepStressParams, t):
    t = np.asarray(t, dtype=float)
    first = ge_pdf(GEParams(p.alpha, p.theta1), t)
    pos = t > p.tau1
    x = _rate_exposure(p, np.where(pos, t, p.tau1 + 1.0))
    with np.errstate(divide="ignore"):
        second = np.exp(math.log(p.alpha * p.theta2) + (p.alpha - 1.0) * log1mexp(x) - x)
    out = np.where(pos, second, first)
    return out[()] if out.ndim == 0 else out


def cem_sample(p: StepStressParams, n: int, rng: RngStream) -> np.ndarray:
    """``n`` sorted lifetimes by inversion of the two-branch CDF."""
    if n < 1:
        raise ValidationError("sample size must be >= 1")
    u = rng.uniform(n)
    # -log(1 - u**(1/alpha)) is theta * exposure.
    x = -np.log1p(-(u ** (1.0 / p.alpha)))
    split = float(ge_cdf(GEParams(p.alpha, p.theta1), p.tau1))
    t = np.where(u <= split, x / p.theta1, p.tau1 - p.beta * p.tau1 + x / p.theta2)
    return np.sort(t)


def _order_stat(full: np.ndarray, r: int) -> float:
    # Units not listed in ``full`` fail after every listed time.
    return float(full[r - 1]) if r <= full.size else math.inf


def termination_time(full, n: int, spec: CensoringSpec) -> float:
    """tau* of a scheme applied to sorted lifetimes ``full``."""
    full = np.asarray(full, dtype=float)
    if isinstance(spec, Complete):
        return float(full[-1]) if full.size else 0.0
    if isinstance(spec, TypeI):
        return float(spec.tau2)
    if not 1 <= spec.r <= n:
        raise ValidationError(f"r must lie in 1..{n}, got {spec.r}")
    t_r = _order_stat(full, spec.r)
    if isinstance(spec, TypeII):
        if math.isinf(t_r):
            raise ValidationError("the r-th failure is not among the supplied times")
        return t_r
    if isinstance(spec, HybridI):
        return min(t_r, spec.tau2)
    if isinstance(spec, HybridII):
        if math.isinf(t_r):
            raise ValidationError("the r-th failure is not among the supplied times")
        return max(t_r, spec.tau2)
    raise ValidationError(f"unknown censoring spec {spec!r}")


def apply_censoring(full, n: int, tau1: float, spec: CensoringSpec) -> ObservedData:
    """Truncate sorted lifetimes at the scheme's termination time.

    ``full`` may list fewer than ``n`` times; the missing units are taken
    to fail after the last listed one.  Times equal to ``tau1`` count as
    stress-1 failures and times equal to ``tau*`` as observed.
    """
    full = np.asarray(full, dtype=float)
    if full.size > n:
        raise ValidationError("more lifetimes than units on test")
    if isinstance(spec, Complete) and full.size != n:
        raise ValidationError("complete data needs all n lifetimes")
    if isinstance(spec, TypeI) and not spec.tau2 > 0:
        raise ValidationError("tau2 must be positive")
    tau_star = termination_time(full, n, spec)
    obs = full[full <= tau_star]
    n1 = int(np.sum(obs <= tau1))
    return ObservedData(obs, n, n1, obs.size - n1, tau_star, tau1, spec)
