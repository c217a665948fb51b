"""Kolmogorov-Smirnov check of a fitted step-stress GE model."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .cem import ObservedData, StepStressParams, cem_cdf
from .errors import DegenerateDataError

__all__ = ["KsReport", "ks_statistic", "kolmogorov_sf", "ks_test"]


@dataclass(frozen=True)
class KsReport:
    statistic: float
    p_value: float  # exact finite-n null distribution of D
    n_used: int
    p_value_asymptotic: float  # Kolmogorov limit law of sqrt(n) D
    approximate: bool  # True when censored units were left out

    def as_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "p_value": self.p_value,
            "p_value_asymptotic": self.p_value_asymptotic,
            "n_used": self.n_used,
            "approximate": self.approximate,
        }


def ks_statistic(cdf_values) -> float:
    """Sup distance between the empirical CDF and sorted model CDF values."""
    F = np.sort(np.asarray(cdf_values, dtype=float))
    n = F.size
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))


def kolmogorov_sf(x: float, tol: float = 1e-12) -> float:
    """``P(K > x) = 2 sum_{k>=1} (-1)^(k-1) exp(-2 k^2 x^2)`` for the Kolmogorov limit law."""
    if x <= 0:
        return 1.0
    if x < 0.2:
        # The alternating series converges slowly here and the tail is 1 to
        # double precision (P(K <= 0.2) ~ 1e-14).
        return 1.0
    total = 0.0
    k = 1
    while True:
        term = math.exp(-2.0 * k * k * x * x)
        total += term if k % 2 else -term
        if term < tol:
            break
        k += 1
    return min(1.0, max(0.0, 2.0 * total))


def ks_test(data: ObservedData, fitted: StepStressParams) -> KsReport:
    """K-S distance over the observed failures with denominator ``n*``.

    The p-value uses the exact null distribution of D for ``n*`` draws
    (``scipy.stats.kstwo``); the asymptotic Kolmogorov value is reported
    alongside.  For censored data the observed failures are treated as
    the whole sample, so the report is marked approximate.
    """
    if data.n_star < 1:
        raise DegenerateDataError("K-S test needs at least one observed failure")
    if fitted.tau1 != data.tau1:
        fitted = StepStressParams(fitted.alpha, fitted.theta1, fitted.theta2, data.tau1)
    n = data.n_star
    D = ks_statistic(cem_cdf(fitted, data.times))
    p_exact = min(1.0, max(0.0, float(stats.kstwo.sf(D, n))))
    p_asym = kolmogorov_sf(math.sqrt(n) * D)
    return KsReport(D, p_exact, n, p_asym, data.n_censored > 0)
