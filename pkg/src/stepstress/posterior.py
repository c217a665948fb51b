"""Order-restricted posterior and its importance sampler.

The posterior of ``(beta, theta2, alpha)`` with ``theta1 = beta*theta2`` and
``0 < beta < 1`` factors as ``h * l1(beta) * l2(theta2|beta) * l3(alpha|beta,theta2)``
where ``l1`` is Uniform(0, 1), ``l2`` is Gamma(n*+b1, rate A1) and ``l3`` is
Gamma(n*+b0, rate A2).  Draws from ``l1 l2 l3`` weighted by ``h`` give the
Bayes estimates and credible intervals.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Union

import numpy as np

from .cem import ObservedData, exposure
from .errors import DegenerateDataError, LowESSError, ValidationError
from .ge_dist import RngStream, gamma_sample, log1mexp

__all__ = [
    "PriorHyper",
    "VAGUE_PRIOR",
    "WeightedDraw",
    "PosteriorSample",
    "CredibleInterval",
    "a1_stat",
    "a2_stat",
    "a3_stat",
    "log_h",
    "log_kernel",
    "draw_importance_sample",
    "bayes_estimate",
    "credible_interval",
    "resolve_g",
    "data_digest",
    "DEFAULT_N",
]

DEFAULT_N = 15000
MIN_ESS = 10.0


@dataclass(frozen=True)
class PriorHyper:
    """Gamma(rate a0, shape b0) on alpha, Gamma(rate a1, shape b1) on theta2,
    Beta(a2, b2) on beta."""

    a0: float = 1e-4
    b0: float = 1e-4
    a1: float = 1e-4
    b1: float = 1e-4
    a2: float = 1.0
    b2: float = 1.0

    def __post_init__(self):
        for name in ("a0", "b0", "a1", "b1", "a2", "b2"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"prior hyperparameter {name} must be positive")

    def alpha_gamma(self) -> tuple[float, float]:
        """(shape, rate) of the alpha prior."""
        return self.b0, self.a0

    def theta2_gamma(self) -> tuple[float, float]:
        return self.b1, self.a1

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("a0", "b0", "a1", "b1", "a2", "b2")}


VAGUE_PRIOR = PriorHyper()


class WeightedDraw(NamedTuple):
    beta: float
    theta2: float
    alpha: float
    log_weight: float

    @property
    def theta1(self) -> float:
        return self.beta * self.theta2


def _check_data(data: ObservedData):
    if data.degenerate:
        raise DegenerateDataError("no observed failures; the posterior is not usable")


def _exposures(beta, data: ObservedData):
    """Exposure matrix, shape ``beta.shape + (n*,)``."""
    beta = np.asarray(beta, dtype=float)[..., None]
    s1 = data.stage1
    s2 = data.stage2
    return np.concatenate(
        [
            np.broadcast_to(beta * s1, beta.shape[:-1] + s1.shape),
            np.broadcast_to(s2 - data.tau1 + beta * data.tau1, beta.shape[:-1] + s2.shape),
        ],
        axis=-1,
    )


def a1_stat(beta, data: ObservedData, prior: PriorHyper = VAGUE_PRIOR):
    """``a1 + beta*sum(stage-1 times) + sum(t - tau1 + beta*tau1)`` over stage 2."""
    beta = np.asarray(beta, dtype=float)
    s1 = math.fsum(data.stage1)
    s2 = math.fsum(data.stage2 - data.tau1)
    out = prior.a1 + beta * s1 + s2 + data.n2_star * data.tau1 * beta
    return out[()] if out.ndim == 0 else out


def _sum_log1mexp(beta, theta2, data: ObservedData):
    x = np.asarray(theta2, dtype=float)[..., None] * _exposures(beta, data)
    return log1mexp(x).sum(axis=-1)


def a2_stat(beta, theta2, data: ObservedData, prior: PriorHyper = VAGUE_PRIOR):
    """``a0 - sum log(1 - exp(-theta2 * exposure_i))``."""
    if data.n_star and data.times[0] <= 0:
        raise ValidationError("failure times must be positive")
    out = prior.a0 - _sum_log1mexp(beta, theta2, data)
    return out[()] if np.ndim(out) == 0 else out


def a3_stat(beta, theta2, alpha, tau_star, tau1):
    """Survival probability at ``tau_star``: ``1 - (1 - exp(-theta2*u*))**alpha``.

    The exposure ``u*`` follows the stress-1 branch when ``tau_star <= tau1``.
    """
    return np.exp(_log_a3(beta, theta2, alpha, tau_star, tau1))


def _log_a3(beta, theta2, alpha, tau_star, tau1):
    u = exposure(tau_star, np.asarray(beta, dtype=float), tau1)
    v = np.asarray(alpha, dtype=float) * log1mexp(np.asarray(theta2, dtype=float) * u)
    with np.errstate(divide="ignore"):
        return np.log(-np.expm1(v))


def log_h(beta, theta2, alpha, data: ObservedData, prior: PriorHyper = VAGUE_PRIOR):
    """Log importance weight (unnormalised) of draws ``(beta, theta2, alpha)``."""
    _check_data(data)
    beta = np.asarray(beta, dtype=float)
    theta2 = np.asarray(theta2, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    return _log_h(beta, theta2, alpha, data, prior, _sum_log1mexp(beta, theta2, data))


def _log_h(beta, theta2, alpha, data, prior, slog):
    ns = data.n_star
    a1 = a1_stat(beta, data, prior)
    a2 = prior.a0 - slog
    out = (
        (data.n1_star + prior.a2 - 1.0) * np.log(beta)
        + (prior.b2 - 1.0) * np.log1p(-beta)
        - (ns + prior.b1) * np.log(a1)
        - (ns + prior.b0) * np.log(a2)
        - slog
    )
    if data.n_censored:
        out = out + data.n_censored * _log_a3(beta, theta2, alpha, data.tau_star, data.tau1)
    return out


def log_kernel(beta, theta2, alpha, data: ObservedData, prior: PriorHyper = VAGUE_PRIOR):
    """Log of the unnormalised posterior density in ``(beta, theta2, alpha)``.

    Written directly from likelihood and prior, without the A1/A2
    bookkeeping; ``log_kernel - log_h - log(l2*l3)`` is constant.
    """
    beta = np.asarray(beta, dtype=float)
    theta2 = np.asarray(theta2, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    x = theta2[..., None] * _exposures(beta, data)
    ll = (
        data.n_star * (np.log(alpha) + np.log(theta2))
        + data.n1_star * np.log(beta)
        + ((alpha[..., None] - 1.0) * log1mexp(x) - x).sum(axis=-1)
    )
    if data.n_censored:
        ll = ll + data.n_censored * _log_a3(beta, theta2, alpha, data.tau_star, data.tau1)
    lp = (
        (prior.a2 - 1.0) * np.log(beta)
        + (prior.b2 - 1.0) * np.log1p(-beta)
        + (prior.b0 - 1.0) * np.log(alpha)
        - prior.a0 * alpha
        + (prior.b1 - 1.0) * np.log(theta2)
        - prior.a1 * theta2
    )
    return ll + lp


def data_digest(data: ObservedData) -> str:
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(data.times, dtype="<f8").tobytes())
    h.update(repr((data.n, data.tau1, data.tau_star, data.spec)).encode())
    return h.hexdigest()[:16]


@dataclass(frozen=True, eq=False)
class PosteriorSample:
    """Columnar weighted draws; ``weights`` are normalised from ``log_weight``."""

    beta: np.ndarray
    theta2: np.ndarray
    alpha: np.ndarray
    log_weight: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        lw = np.asarray(self.log_weight, dtype=float)
        ok = np.isfinite(lw)
        if not ok.any():
            raise LowESSError("every importance weight is zero")
        shifted = np.where(ok, lw - lw[ok].max(), -np.inf)
        w = np.exp(shifted)
        w /= w.sum()
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "ess", float(1.0 / np.sum(w * w)))

    @property
    def theta1(self) -> np.ndarray:
        return self.beta * self.theta2

    @property
    def size(self) -> int:
        return int(self.beta.size)

    def draw(self, i: int) -> WeightedDraw:
        return WeightedDraw(
            float(self.beta[i]), float(self.theta2[i]), float(self.alpha[i]), float(self.log_weight[i])
        )


def draw_importance_sample(
    data: ObservedData,
    prior: PriorHyper = VAGUE_PRIOR,
    N: int = DEFAULT_N,
    rng: RngStream | None = None,
    block_size: int = 1 << 16,
) -> PosteriorSample:
    """Importance sample of size ``N``.

    Block ``b`` of ``block_size`` draws uses ``rng.substream(b)``, so the
    output is fixed by ``(seed, N, block_size)``.
    """
    if N < 2:
        raise ValidationError("need at least two importance draws")
    _check_data(data)
    if rng is None:
        raise ValidationError("an explicit RngStream is required")
    ns = data.n_star
    cols = []
    for b, start in enumerate(range(0, N, block_size)):
        m = min(block_size, N - start)
        sub = rng.substream(b)
        beta = sub.uniform(m)
        # Uniform(0,1) may return exactly 0.
        beta = np.where(beta > 0, beta, np.nextafter(0.0, 1.0))
        theta2 = gamma_sample(ns + prior.b1, a1_stat(beta, data, prior), sub)
        slog = _sum_log1mexp(beta, theta2, data)
        alpha = gamma_sample(ns + prior.b0, prior.a0 - slog, sub)
        cols.append((beta, theta2, alpha, _log_h(beta, theta2, alpha, data, prior, slog)))
    beta, theta2, alpha, lw = (np.concatenate(c) for c in zip(*cols))
    meta = {
        "seed": rng.seed,
        "stream": list(rng.path),
        "N": N,
        "block_size": block_size,
        "prior": prior.as_dict(),
        "data_digest": data_digest(data),
    }
    return PosteriorSample(beta, theta2, alpha, lw, meta)


GFunc = Union[str, Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]]

_NAMED_G = {
    "alpha": lambda b, t2, a: a,
    "theta1": lambda b, t2, a: b * t2,
    "theta2": lambda b, t2, a: t2,
    "beta": lambda b, t2, a: b,
}

_EXPR_NS = {
    name: getattr(np, name)
    for name in ("exp", "log", "log1p", "expm1", "sqrt", "sin", "cos", "pi", "abs", "minimum", "maximum")
}


def resolve_g(g: GFunc) -> Callable:
    """Named parameter, an expression in alpha/beta/theta1/theta2, or a callable."""
    if callable(g):
        return g
    if g in _NAMED_G:
        return _NAMED_G[g]
    code = compile(g, "<g>", "eval")
    allowed = set(_EXPR_NS) | {"alpha", "beta", "theta1", "theta2"}
    unknown = set(code.co_names) - allowed
    if unknown:
        raise ValidationError(f"unknown names in g expression: {sorted(unknown)}")

    def fn(b, t2, a):
        env = dict(_EXPR_NS, alpha=a, beta=b, theta1=b * t2, theta2=t2)
        return np.broadcast_to(eval(code, {"__builtins__": {}}, env), np.shape(b))

    return fn


def _g_values(sample: PosteriorSample, g: GFunc) -> np.ndarray:
    return np.asarray(resolve_g(g)(sample.beta, sample.theta2, sample.alpha), dtype=float)


def bayes_estimate(sample: PosteriorSample, g: GFunc) -> float:
    """Posterior mean of ``g`` under squared-error loss."""
    return float(np.dot(sample.weights, _g_values(sample, g)))


@dataclass(frozen=True)
class CredibleInterval:
    lower: float
    upper: float
    level: float
    kind: str

    @property
    def length(self) -> float:
        return self.upper - self.lower

    def covers(self, value: float) -> bool:
        return self.lower <= value <= self.upper


KINDS = ("left", "symmetric", "hpd")


def _weighted_quantile(g_sorted, cw, p):
    idx = np.searchsorted(cw, p, side="left")
    return g_sorted[min(int(idx), g_sorted.size - 1)]


def _hpd(g_sorted, w_sorted, cw, content):
    """Shortest window ``[j1, j2]`` of the sorted draws with weight >= content.

    For every start ``j1`` the end is the first index where the running
    weight reaches ``content``; the window with the smallest width wins
    (earliest start on ties).
    """
    before = np.concatenate(([0.0], cw[:-1]))
    j2 = np.searchsorted(cw, before + content, side="left")
    valid = j2 < g_sorted.size
    if not valid.any():
        return g_sorted[0], g_sorted[-1]
    j1 = np.flatnonzero(valid)
    j2 = j2[valid]
    width = g_sorted[j2] - g_sorted[j1]
    k = int(np.argmin(width))
    return g_sorted[j1[k]], g_sorted[j2[k]]


def sorted_weights(sample: PosteriorSample, g: GFunc):
    vals = _g_values(sample, g)
    order = np.argsort(vals, kind="stable")
    g_sorted = vals[order]
    w_sorted = sample.weights[order]
    return g_sorted, w_sorted, np.cumsum(w_sorted)


def credible_interval(sample: PosteriorSample, g: GFunc, gamma: float = 0.05, kind: str = "hpd",
                      _sorted=None) -> CredibleInterval:
    """100(1-gamma)% credible interval of ``g``: 'left', 'symmetric' or 'hpd'."""
    if not 0 < gamma < 1:
        raise ValidationError("gamma must lie in (0, 1)")
    if kind not in KINDS:
        raise ValidationError(f"kind must be one of {KINDS}")
    if sample.ess < MIN_ESS:
        raise LowESSError(
            f"effective sample size {sample.ess:.1f} < {MIN_ESS:g}; interval would be meaningless"
        )
    g_sorted, w_sorted, cw = _sorted if _sorted is not None else sorted_weights(sample, g)
    if kind == "left":
        lo, hi = g_sorted[0], _weighted_quantile(g_sorted, cw, 1.0 - gamma)
    elif kind == "symmetric":
        lo = _weighted_quantile(g_sorted, cw, gamma / 2)
        hi = _weighted_quantile(g_sorted, cw, 1.0 - gamma / 2)
    else:
        lo, hi = _hpd(g_sorted, w_sorted, cw, 1.0 - gamma)
    return CredibleInterval(float(lo), float(hi), 1.0 - gamma, kind)
