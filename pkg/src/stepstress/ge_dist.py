"""Generalized exponential (GE) distribution and random-variate streams.

GE(alpha, lam) has CDF ``(1 - exp(-lam t))**alpha`` for ``t >= 0``.  All
functions broadcast over numpy arrays of times / probabilities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

__all__ = [
    "GEParams",
    "RngStream",
    "ge_pdf",
    "ge_cdf",
    "ge_quantile",
    "ge_mean",
    "ge_sample",
    "gamma_sample",
    "digamma",
    "log1mexp",
]


@dataclass(frozen=True)
class GEParams:
    alpha: float
    lam: float

    def __post_init__(self):
        if not (self.alpha > 0 and self.lam > 0):
            raise ValidationError(
                f"GE parameters must be positive, got alpha={self.alpha}, lam={self.lam}"
            )


class RngStream:
    """Reproducible random stream identified by ``(seed, stream_id)``.

    Backed by numpy's counter-based Philox bit generator keyed through a
    ``SeedSequence`` spawn key, so ``substream`` children are independent
    of each other and of the parent.  The stream advances only when one
    of its sampling methods is called.
    """

    def __init__(self, seed: int, stream_id: int = 0, _path: tuple[int, ...] = ()):
        if stream_id < 0 or any(i < 0 for i in _path):
            raise ValidationError("stream ids must be non-negative")
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        self.path = (self.stream_id, *_path)
        seq = np.random.SeedSequence(self.seed & ((1 << 64) - 1), spawn_key=self.path)
        self._gen = np.random.Generator(np.random.Philox(seq))

    def substream(self, *ids: int) -> RngStream:
        """Child stream; the same ids always give the same child."""
        return RngStream(self.seed, self.stream_id, (*self.path[1:], *map(int, ids)))

    def uniform(self, size=None):
        """Uniform draws on [0, 1)."""
        return self._gen.random(size)

    def gamma(self, shape, rate, size=None):
        return self._gen.gamma(shape, 1.0 / np.asarray(rate, dtype=float), size)

    def __repr__(self):
        return f"RngStream(seed={self.seed}, path={self.path})"


def log1mexp(x):
    """``log(1 - exp(-x))`` for ``x > 0``, accurate at both ends."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        return np.where(x < math.log(2.0), np.log(-np.expm1(-x)), np.log1p(-np.exp(-x)))


def ge_pdf(p: GEParams, t):
    t = np.asarray(t, dtype=float)
    pos = t > 0
    tt = np.where(pos, t, 1.0)
    x = p.lam * tt
    with np.errstate(divide="ignore", invalid="ignore"):
        logf = math.log(p.alpha * p.lam) + (p.alpha - 1.0) * log1mexp(x) - x
        out = np.where(pos, np.exp(logf), 0.0)
        if p.alpha < 1.0:
            out = np.where(t == 0, np.inf, out)
        elif p.alpha == 1.0:
            out = np.where(t == 0, p.lam, out)
    return out[()] if out.ndim == 0 else out


def ge_cdf(p: GEParams, t):
    t = np.asarray(t, dtype=float)
    pos = t > 0
    x = p.lam * np.where(pos, t, 1.0)
    out = np.where(pos, np.exp(p.alpha * log1mexp(x)), 0.0)
    out = np.clip(out, 0.0, 1.0)
    return out[()] if out.ndim == 0 else out


def ge_quantile(p: GEParams, u):
    u = np.asarray(u, dtype=float)
    if np.any((u < 0) | (u >= 1)) or np.any(np.isnan(u)):
        raise ValidationError("quantile level must lie in [0, 1)")
    out = -np.log1p(-(u ** (1.0 / p.alpha))) / p.lam
    return out[()] if out.ndim == 0 else out


def ge_mean(p: GEParams) -> float:
    """Mean lifetime ``(digamma(alpha + 1) - digamma(1)) / lam``."""
    return float((digamma(p.alpha + 1.0) - digamma(1.0)) / p.lam)


def ge_sample(p: GEParams, rng: RngStream, size=None):
    return ge_quantile(p, rng.uniform(size))


def gamma_sample(shape, rate, rng: RngStream, size=None):
    """Gamma draws with density proportional to ``x**(shape-1) exp(-rate x)``."""
    if np.any(np.asarray(shape) <= 0) or np.any(np.asarray(rate) <= 0):
        raise ValidationError("gamma shape and rate must be positive")
    return rng.gamma(shape, rate, size)


# Bernoulli-number coefficients B_2k / (2k) of the asymptotic series.
_PSI_COEF = (
    1.0 / 12,
    -1.0 / 120,
    1.0 / 252,
    -1.0 / 240,
    1.0 / 132,
    -691.0 / 32760,
    1.0 / 12,
)


def digamma(x):
    """Digamma via upward recurrence to ``x >= 10`` and the asymptotic series."""
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise ValidationError("digamma is only provided for x > 0")
    acc = np.zeros_like(x)
    y = x.copy()
    while True:
        small = y < 10.0
        if not small.any():
            break
        acc = acc - np.where(small, 1.0 / y, 0.0)
        y = np.where(small, y + 1.0, y)
    inv2 = 1.0 / (y * y)
    series = np.zeros_like(y)
    for c in reversed(_PSI_COEF):
        series = (series + c) * inv2
    out = acc + np.log(y) - 0.5 / y - series
    return out[()] if out.ndim == 0 else out
