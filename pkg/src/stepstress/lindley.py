"""Lindley's second-order approximation of posterior moments.

The expansion is taken about the MLE in the coordinates
``(lambda1, lambda2, lambda3) = (alpha, theta2, beta)``:

    E[g] ~ g + 1/2 sum u_ij s_ij + sum u_i rho_j s_ij + 1/2 sum L_ijk U_k s_ij,

with ``s = (-L2)^{-1}``, ``U_k = sum_i u_i s_ki``, derivatives ``L`` of the
log-likelihood and ``rho`` of the log-prior.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .cem import ObservedData
from .errors import CurvatureError, NumericalError, ValidationError
from .mle import MleResult, loglik_derivatives
from .posterior import PriorHyper

__all__ = [
    "LindleyWorkspace",
    "GSpec",
    "LindleyMoment",
    "build_workspace",
    "prior_log_gradient",
    "lindley_expectation",
    "posterior_moment",
    "posterior_variance",
    "posterior_cv_sum",
]


@dataclass(frozen=True, eq=False)
class LindleyWorkspace:
    L2: np.ndarray
    L3: np.ndarray
    sigma: np.ndarray
    rho: np.ndarray
    eval_point: np.ndarray  # (alpha, theta2, beta)


class GSpec(enum.Enum):
    """Target functions with their gradient and Hessian in ``(alpha, theta2, beta)``."""

    ALPHA = "alpha"
    ALPHA_SQ = "alpha_sq"
    THETA1 = "theta1"
    THETA1_SQ = "theta1_sq"
    THETA2 = "theta2"
    THETA2_SQ = "theta2_sq"

    def value(self, lam) -> float:
        a, t2, b = lam
        return {
            GSpec.ALPHA: a,
            GSpec.ALPHA_SQ: a * a,
            GSpec.THETA1: b * t2,
            GSpec.THETA1_SQ: (b * t2) ** 2,
            GSpec.THETA2: t2,
            GSpec.THETA2_SQ: t2 * t2,
        }[self]

    def derivatives(self, lam):
        """``(u_i, u_ij)`` at ``lam``."""
        a, t2, b = lam
        u = np.zeros(3)
        uu = np.zeros((3, 3))
        if self is GSpec.ALPHA:
            u[0] = 1.0
        elif self is GSpec.ALPHA_SQ:
            u[0] = 2 * a
            uu[0, 0] = 2.0
        elif self is GSpec.THETA2:
            u[1] = 1.0
        elif self is GSpec.THETA2_SQ:
            u[1] = 2 * t2
            uu[1, 1] = 2.0
        elif self is GSpec.THETA1:
            u[1], u[2] = b, t2
            uu[1, 2] = uu[2, 1] = 1.0
        else:  # THETA1_SQ
            u[1], u[2] = 2 * b * b * t2, 2 * b * t2 * t2
            uu[1, 1] = 2 * b * b
            uu[2, 2] = 2 * t2 * t2
            uu[1, 2] = uu[2, 1] = 4 * b * t2
        return u, uu


_PAIRS = {
    "alpha": (GSpec.ALPHA, GSpec.ALPHA_SQ),
    "theta1": (GSpec.THETA1, GSpec.THETA1_SQ),
    "theta2": (GSpec.THETA2, GSpec.THETA2_SQ),
}


def prior_log_gradient(lam, prior: PriorHyper) -> np.ndarray:
    """Gradient of the log prior density (Gamma x Gamma x Beta)."""
    a, t2, b = lam
    return np.array(
        [
            (prior.b0 - 1.0) / a - prior.a0,
            (prior.b1 - 1.0) / t2 - prior.a1,
            (prior.a2 - 1.0) / b - (prior.b2 - 1.0) / (1.0 - b),
        ]
    )


def build_workspace(mle: MleResult, data: ObservedData, prior: PriorHyper) -> LindleyWorkspace:
    """Derivative tensors and ``(-L2)^{-1}`` at an interior MLE."""
    if mle.boundary:
        raise CurvatureError(f"MLE is boundary-flagged ({mle.reason})")
    lam = np.array([mle.alpha_hat, mle.theta2_hat, mle.beta_hat])
    _, L2, L3 = loglik_derivatives(*lam, data)
    L2 = 0.5 * (L2 + L2.T)
    try:
        chol = np.linalg.cholesky(-L2)
    except np.linalg.LinAlgError as exc:
        raise CurvatureError("negative Hessian is not positive definite at the MLE") from exc
    if np.min(np.diag(chol)) ** 2 < 1e-14 * np.max(np.abs(L2)):
        raise CurvatureError("negative Hessian is numerically singular at the MLE")
    eye = np.eye(3)
    sigma = np.linalg.solve(chol.T, np.linalg.solve(chol, eye))
    sigma = 0.5 * (sigma + sigma.T)
    return LindleyWorkspace(L2, L3, sigma, prior_log_gradient(lam, prior), lam)


def lindley_expectation(ws: LindleyWorkspace, g: GSpec) -> float:
    u, uu = g.derivatives(ws.eval_point)
    s = ws.sigma
    U = s @ u
    curvature = 0.5 * np.sum(uu * s)
    prior_term = u @ s @ ws.rho
    skew = 0.5 * np.einsum("ijk,k,ij->", ws.L3, U, s)
    return float(g.value(ws.eval_point) + curvature + prior_term + skew)


@dataclass(frozen=True)
class LindleyMoment:
    mean: float
    variance: float
    clamped: bool  # raw E[g^2] - E[g]^2 was negative


def posterior_moment(ws: LindleyWorkspace, which: str) -> LindleyMoment:
    try:
        first, second = _PAIRS[which]
    except KeyError:
        raise ValidationError(f"which must be one of {sorted(_PAIRS)}") from None
    mean = lindley_expectation(ws, first)
    raw = lindley_expectation(ws, second) - mean * mean
    return LindleyMoment(mean, max(raw, 0.0), raw < 0)


def posterior_variance(ws: LindleyWorkspace, which: str) -> float:
    return posterior_moment(ws, which).variance


def posterior_cv_sum(ws: LindleyWorkspace) -> float:
    """Sum of posterior sd / posterior mean over alpha, theta1 and theta2."""
    total = 0.0
    for which in _PAIRS:
        mom = posterior_moment(ws, which)
        if not mom.mean > 0:
            raise NumericalError(f"non-positive Lindley mean for {which}; CV undefined")
        total += math.sqrt(mom.variance) / mom.mean
    return total
