"""Order-restricted maximum likelihood for the GE step-stress model.

Parameters are ordered ``(alpha, theta2, beta)`` throughout, with
``theta1 = beta * theta2`` and ``0 < beta < 1``.  For fixed ``beta`` the
likelihood is profiled: ``alpha`` has a closed form (complete data) or a
well-bracketed 1-D root (censored data), and ``theta2`` is the root of
the profile score.  The MLE maximizes the profile over a ``beta`` grid,
refined by a Newton polish on all three parameters, with a bounded
Brent search on the profile as the fallback.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .cem import ObservedData, exposure
from .errors import DegenerateDataError, RootNotFoundError
from .ge_dist import log1mexp

__all__ = [
    "MleResult",
    "loglik",
    "loglik_derivatives",
    "alpha_hat_closed",
    "theta2_given_beta",
    "profile_loglik",
    "fit_mle",
    "BETA_GRID",
]

BETA_GRID = np.round(np.arange(1, 1000) * 1e-3, 3)
THETA_BRACKET = (1e-8, 1e4)


def _split_exposures(beta, data: ObservedData):
    """Per-observation ``(a, b)`` with exposure ``a + b*beta``."""
    t = data.times
    stage1 = t <= data.tau1
    a = np.where(stage1, 0.0, t - data.tau1)
    b = np.where(stage1, t, data.tau1)
    return a, b


def _star_ab(data: ObservedData):
    if data.tau_star <= data.tau1:
        return 0.0, data.tau_star
    return data.tau_star - data.tau1, data.tau1


def _log_const(data: ObservedData) -> float:
    # log n!/(n - n*)!  (log n! for complete data)
    return math.lgamma(data.n + 1) - math.lgamma(data.n - data.n_star + 1)


def loglik(alpha, theta2, beta, data: ObservedData):
    """Log-likelihood including the combinatorial constant ``log n!/(n-n*)!``.

    Censored units contribute ``log S(tau*)`` each.  Broadcasts over
    parameter arrays.
    """
    alpha = np.asarray(alpha, dtype=float)
    theta2 = np.asarray(theta2, dtype=float)
    beta = np.asarray(beta, dtype=float)
    a, b = _split_exposures(beta, data)
    u = a + b * beta[..., None]
    x = theta2[..., None] * u
    out = (
        _log_const(data)
        + data.n_star * (np.log(alpha) + np.log(theta2))
        + data.n1_star * np.log(beta)
        + ((alpha[..., None] - 1.0) * log1mexp(x) - x).sum(axis=-1)
    )
    m = data.n_censored
    if m:
        us = exposure(data.tau_star, beta, data.tau1)
        v = alpha * log1mexp(theta2 * us)
        with np.errstate(divide="ignore"):
            out = out + m * np.log(-np.expm1(v))
    return out[()] if np.ndim(out) == 0 else out


def _phi_derivs(x):
    """log(1-e^-x) and its first three derivatives."""
    y = np.exp(-x)
    d = -np.expm1(-x)
    return log1mexp(x), y / d, -y / d**2, y * (1 + y) / d**3


def _chain(F1, F2, F3, J, H):
    """Derivatives of ``F(y(p))`` in ``p`` from those of F in ``y``.

    Leading axis of every argument runs over observations.
    """
    g1 = np.einsum("ka,kap->p", F1, J)
    g2 = np.einsum("kab,kap,kbq->pq", F2, J, J) + np.einsum("ka,kapq->pq", F1, H)
    g3 = (
        np.einsum("kabc,kap,kbq,kcr->pqr", F3, J, J, J)
        + np.einsum("kab,kapr,kbq->pqr", F2, H, J)
        + np.einsum("kab,kap,kbqr->pqr", F2, J, H)
        + np.einsum("kab,kapq,kbr->pqr", F2, H, J)
    )
    return g1, g2, g3


def _jacobians(a, b, theta2, beta):
    """Jacobian/Hessian of ``(alpha, x)`` w.r.t. ``(alpha, theta2, beta)``, ``x = theta2*(a + b*beta)``."""
    k = a.size
    J = np.zeros((k, 2, 3))
    J[:, 0, 0] = 1.0
    J[:, 1, 1] = a + b * beta
    J[:, 1, 2] = theta2 * b
    H = np.zeros((k, 2, 3, 3))
    H[:, 1, 1, 2] = H[:, 1, 2, 1] = b
    return J, H


def loglik_derivatives(alpha: float, theta2: float, beta: float, data: ObservedData):
    """Gradient, Hessian and third-derivative tensor of the log-likelihood.

    Closed form by the chain rule through the exposure ``x = theta2*(a + b*beta)``,
    which is bilinear in ``(theta2, beta)``.  Order of axes: ``(alpha, theta2, beta)``.
    """
    a, b = _split_exposures(beta, data)
    x = theta2 * (a + b * beta)
    phi, p1, p2, p3 = _phi_derivs(x)
    k = x.size
    F1 = np.stack([phi, -1.0 + (alpha - 1.0) * p1], axis=1)
    F2 = np.zeros((k, 2, 2))
    F2[:, 0, 1] = F2[:, 1, 0] = p1
    F2[:, 1, 1] = (alpha - 1.0) * p2
    F3 = np.zeros((k, 2, 2, 2))
    for idx in ((0, 1, 1), (1, 0, 1), (1, 1, 0)):
        F3[(slice(None),) + idx] = p2
    F3[:, 1, 1, 1] = (alpha - 1.0) * p3
    J, H = _jacobians(a, b, theta2, beta)
    g1, g2, g3 = _chain(F1, F2, F3, J, H)

    ns, n1 = data.n_star, data.n1_star
    g1 += [ns / alpha, ns / theta2, n1 / beta]
    g2[0, 0] -= ns / alpha**2
    g2[1, 1] -= ns / theta2**2
    g2[2, 2] -= n1 / beta**2
    g3[0, 0, 0] += 2 * ns / alpha**3
    g3[1, 1, 1] += 2 * ns / theta2**3
    g3[2, 2, 2] += 2 * n1 / beta**3

    m = data.n_censored
    if m:
        sa, sb = _star_ab(data)
        xs = theta2 * (sa + sb * beta)
        f, q1, q2, q3 = (float(v) for v in _phi_derivs(np.array(xs)))
        v = alpha * f
        w = math.exp(v)
        om = -math.expm1(v)
        G1, G2, G3 = -w / om, -w / om**2, -w * (1 + w) / om**3
        vd1 = np.array([f, alpha * q1])
        vd2 = np.array([[0.0, q1], [q1, alpha * q2]])
        vd3 = np.zeros((2, 2, 2))
        for idx in ((0, 1, 1), (1, 0, 1), (1, 1, 0)):
            vd3[idx] = q2
        vd3[1, 1, 1] = alpha * q3
        c1 = G1 * vd1
        c2 = G2 * np.outer(vd1, vd1) + G1 * vd2
        c3 = (
            G3 * np.einsum("a,b,c->abc", vd1, vd1, vd1)
            + G2
            * (
                np.einsum("ab,c->abc", vd2, vd1)
                + np.einsum("ac,b->abc", vd2, vd1)
                + np.einsum("bc,a->abc", vd2, vd1)
            )
            + G1 * vd3
        )
        Js, Hs = _jacobians(np.array([sa]), np.array([sb]), theta2, beta)
        h1, h2, h3 = _chain(c1[None], c2[None], c3[None], Js, Hs)
        g1 += m * h1
        g2 += m * h2
        g3 += m * h3
    return g1, g2, g3


def alpha_hat_closed(beta, theta2, data: ObservedData):
    """``-n* / sum log(1 - exp(-theta2 * exposure_i))``.

    The exact conditional MLE of alpha for complete data; for censored
    data it is the starting point of the censored alpha-score root.
    """
    a, b = _split_exposures(beta, data)
    x = np.asarray(theta2, dtype=float)[..., None] * (a + b * np.asarray(beta, dtype=float)[..., None])
    out = -data.n_star / log1mexp(x).sum(axis=-1)
    return out[()] if np.ndim(out) == 0 else out


@dataclass
class _Profile:
    """Profile quantities at rows of ``(beta, theta2)``; alpha = kappa / E."""

    score: np.ndarray
    loglik: np.ndarray
    alpha: np.ndarray
    dscore: np.ndarray | None = None


class _ProfileProblem:
    """Vectorized profile likelihood over a set of beta values.

    Sums of ``-log(1-e^-x)`` and ``1/(e^x - 1)`` are carried scaled by
    ``exp(min x)`` so that alpha, which grows like that factor, never
    overflows inside the score.
    """

    def __init__(self, betas, data: ObservedData):
        if data.degenerate:
            raise DegenerateDataError("no observed failures")
        self.data = data
        self.betas = np.atleast_1d(np.asarray(betas, dtype=float))
        a, b = _split_exposures(0.0, data)
        self.U = a[None, :] + b[None, :] * self.betas[:, None]
        self.sum_u = self.U.sum(axis=1)
        sa, sb = _star_ab(data)
        self.ustar = sa + sb * self.betas
        self.m = data.n_censored

    def _kappa(self, rho):
        """Root in [n*, n] of ``n*/k - 1 + m*rho/expm1(k*rho)`` (decreasing in k)."""
        ns, m = self.data.n_star, self.m
        if not m:
            return np.full(rho.shape, float(ns))
        lo = np.full(rho.shape, float(ns))
        hi = np.full(rho.shape, float(ns + m))
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            f = ns / mid - 1.0 + m * _x_over_expm1(mid * rho) / mid
            pos = f > 0
            lo = np.where(pos, mid, lo)
            hi = np.where(pos, hi, mid)
        return 0.5 * (lo + hi)

    def evaluate(self, theta, rows=slice(None)) -> _Profile:
        U = self.U[rows]
        x = theta[:, None] * U
        s = x.min(axis=1)
        sc = np.exp(s[:, None] - x)
        d = -np.expm1(-x)
        big = x >= 30.0
        expo_s = np.exp(np.minimum(s, 30.0))[:, None]
        negphi_s = np.where(big, sc * (1.0 + 0.5 * np.exp(-x)), -log1mexp(np.where(big, 1.0, x)) * expo_s)
        E_s = negphi_s.sum(axis=1)
        S1 = (U * sc / d).sum(axis=1)
        R = S1 / E_s
        with np.errstate(under="ignore"):
            sum_udphi = S1 * np.exp(-s)
            E = E_s * np.exp(-s)
        ns = self.data.n_star
        ll = ns * (np.log(theta) + s - np.log(E_s)) - theta * self.sum_u[rows] + E
        ll += self.data.n1_star * np.log(self.betas[rows])
        if self.m:
            us = self.ustar[rows]
            xs = theta * us
            log_rho = _log_negphi(xs) + s - np.log(E_s)
            with np.errstate(under="ignore"):
                rho = np.exp(log_rho)
            kappa = self._kappa(rho)
            z = kappa * rho
            score = ns / theta - self.sum_u[rows] + kappa * R - sum_udphi
            # m * d/dtheta log S(tau*), written to survive rho -> 0.
            score -= self.m * us * _dphi_over_negphi(xs) * _x_over_expm1(z)
            log_s = np.where(z > 1e-10, np.log(-np.expm1(-np.maximum(z, 1e-10))), np.log(kappa) + log_rho - 0.5 * z)
            ll += ns * np.log(kappa) - kappa + self.m * log_s
        else:
            kappa = float(ns)
            score = ns / theta - self.sum_u[rows] + kappa * R - sum_udphi
            ll += ns * math.log(ns) - ns
            # d(score)/d(theta) along the alpha profile: L22 - L12**2 / L11.
            S2 = -(U * U * sc / (d * d)).sum(axis=1)
            with np.errstate(under="ignore"):
                dscore = -ns / theta**2 + ns * S2 / E_s - S2 * np.exp(-s) + ns * R * R
            return _Profile(score, ll + _log_const(self.data), kappa / E, dscore)
        ll += _log_const(self.data)
        return _Profile(score, ll, kappa / E)

    def solve_theta(self, rows=slice(None), tol=1e-13, max_iter=200):
        """Profile-score root in log(theta2) by bisection then Illinois steps."""
        nrow = self.U[rows].shape[0]
        lo = np.full(nrow, math.log(THETA_BRACKET[0]))
        hi = np.full(nrow, math.log(THETA_BRACKET[1]))
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            f_lo = self.evaluate(np.exp(lo), rows).score
            f_hi = self.evaluate(np.exp(hi), rows).score
        bad = ~((f_lo > 0) & (f_hi < 0))
        if bad.all():
            raise RootNotFoundError("profile score has no sign change on the theta2 bracket")
        # Complete data: safeguarded Newton in log(theta2).  Censored data:
        # a few bisection steps, then Illinois (modified regula falsi), where
        # the value at an end that stays put twice running is halved.
        newton = self.m == 0
        side = np.zeros(nrow, dtype=int)
        c = np.clip(np.log(self.data.n_star / self.sum_u[rows]), lo, hi)
        for it in range(max_iter):
            width = hi - lo
            if np.all((width < tol * (1.0 + np.abs(lo))) | bad):
                break
            if newton:
                if it == 0:
                    c = np.where(bad, 0.5 * (lo + hi), c)
            elif it < 6:
                c = 0.5 * (lo + hi)
            else:
                c = hi - f_hi * width / (f_hi - f_lo)
                c = np.where(np.isfinite(c) & (c > lo) & (c < hi), c, 0.5 * (lo + hi))
            with np.errstate(over="ignore", invalid="ignore"):
                prof = self.evaluate(np.exp(c), rows)
            fc = np.where(bad | np.isnan(prof.score), -1.0, prof.score)
            pos = fc > 0
            if not newton and it >= 6:
                f_hi = np.where(pos & (side == 1), 0.5 * f_hi, f_hi)
                f_lo = np.where(~pos & (side == -1), 0.5 * f_lo, f_lo)
            lo = np.where(pos, c, lo)
            f_lo = np.where(pos, fc, f_lo)
            hi = np.where(pos, hi, c)
            f_hi = np.where(pos, f_hi, fc)
            side = np.where(pos, 1, -1)
            if newton:
                with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
                    step = fc / (np.exp(c) * prof.dscore)
                nxt = c - step
                done = (np.abs(step) < tol * (1.0 + np.abs(c))) | (fc == 0)
                lo = np.where(done, c, lo)
                hi = np.where(done, c, hi)
                ok = np.isfinite(nxt) & (nxt > lo) & (nxt < hi)
                c = np.where(ok, nxt, 0.5 * (lo + hi))
        theta = np.exp(0.5 * (lo + hi))
        theta = np.where(bad, np.nan, theta)
        return theta

    def solve(self, rows=slice(None)):
        theta = self.solve_theta(rows)
        ok = np.isfinite(theta)
        prof = self.evaluate(np.where(ok, theta, 1.0), rows)
        ll = np.where(ok, prof.loglik, -np.inf)
        return theta, prof.alpha, ll


def _x_over_expm1(z):
    """``z / (e^z - 1)`` with the removable singularity at 0."""
    z = np.asarray(z, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        r = z / np.expm1(z)
    return np.where(np.abs(z) < 1e-10, 1.0 - 0.5 * z, r)


def _log_negphi(x):
    """``log(-log(1 - e^-x))``, also for x large enough that the inner term underflows."""
    x = np.asarray(x, dtype=float)
    big = x >= 30.0
    with np.errstate(under="ignore"):
        tail = -x + np.log1p(0.5 * np.exp(-x))
    return np.where(big, tail, np.log(-log1mexp(np.where(big, 1.0, x))))


def _dphi_over_negphi(x):
    """``(1/(e^x - 1)) / (-log(1 - e^-x))``, tending to 1 as x grows."""
    x = np.asarray(x, dtype=float)
    big = x >= 30.0
    xx = np.where(big, 1.0, x)
    with np.errstate(under="ignore"):
        y = np.exp(-x)
    return np.where(big, (1.0 + y) / (1.0 + 0.5 * y), 1.0 / np.expm1(xx) / -log1mexp(xx))


def theta2_given_beta(beta: float, data: ObservedData) -> float:
    """Profile-score root in theta2 at fixed beta (alpha profiled out)."""
    prob = _ProfileProblem([beta], data)
    theta = prob.solve_theta()
    if not np.isfinite(theta[0]):
        raise RootNotFoundError(f"no theta2 root at beta={beta}")
    return float(theta[0])


def profile_score(beta: float, theta2: float, data: ObservedData) -> float:
    prob = _ProfileProblem([beta], data)
    return float(prob.evaluate(np.array([theta2])).score[0])


def profile_loglik(betas, data: ObservedData):
    """``(theta2_hat, alpha_hat, loglik)`` profiled at each beta."""
    return _ProfileProblem(betas, data).solve()


@dataclass(frozen=True)
class MleResult:
    alpha_hat: float
    theta2_hat: float
    beta_hat: float
    loglik: float
    boundary: bool = False
    reason: str = ""

    @property
    def theta1_hat(self) -> float:
        return self.beta_hat * self.theta2_hat

    def as_dict(self) -> dict:
        return {
            "alpha": self.alpha_hat,
            "theta1": self.theta1_hat,
            "theta2": self.theta2_hat,
            "beta": self.beta_hat,
            "loglik": self.loglik,
            "boundary": self.boundary,
            "reason": self.reason,
        }


def fit_mle(data: ObservedData, grid=BETA_GRID, refine_tol: float = 1e-10) -> MleResult:
    """Grid search over beta, then a Newton polish of all three parameters.

    If the polish fails its safeguards, a bounded Brent search on the
    profile between the neighbouring grid points is used instead.

    Results with no failures in one of the two stress segments, or whose
    grid maximum sits on the end of the grid, are returned with
    ``boundary=True``.
    """
    if data.degenerate:
        raise DegenerateDataError("no observed failures")
    grid = np.asarray(grid, dtype=float)
    prob = _ProfileProblem(grid, data)
    theta, alpha, ll = prob.solve()
    if not np.isfinite(ll).any():
        raise RootNotFoundError("profile likelihood undefined on the whole beta grid")
    k = int(np.argmax(ll))  # first maximum, i.e. smallest beta on ties
    reasons = []
    if data.n1_star == 0:
        reasons.append("no stress-1 failures")
    if data.n2_star == 0:
        reasons.append("no stress-2 failures")
    if k in (0, grid.size - 1):
        reasons.append("grid maximum on the boundary")

    point = np.array([alpha[k], theta[k], grid[k]])
    if 0 < k < grid.size - 1:
        polished = _newton_polish(point, data, (grid[k - 1], grid[k + 1]))
        if polished is None:
            lo, hi = grid[k - 1], grid[k + 1]

            def neg(bv):
                _, _, v = profile_loglik([bv], data)
                return -float(v[0])

            res = minimize_scalar(neg, bounds=(lo, hi), method="bounded", options={"xatol": refine_tol})
            if res.success and -res.fun >= ll[k]:
                th, al, _ = profile_loglik([res.x], data)
                point = np.array([al[0], th[0], res.x])
        else:
            point = polished
    return MleResult(
        alpha_hat=float(point[0]),
        theta2_hat=float(point[1]),
        beta_hat=float(point[2]),
        loglik=float(loglik(*point, data)),
        boundary=bool(reasons),
        reason="; ".join(reasons),
    )


def _newton_polish(x0, data: ObservedData, beta_bounds, gtol: float = 1e-9, max_iter: int = 20):
    """Full Newton ascent from a grid maximizer; ``None`` if it misbehaves.

    Steps must keep the Hessian negative definite, increase the
    log-likelihood, and keep beta inside the neighbouring grid cells.
    """
    x = np.array(x0, dtype=float)
    f = float(loglik(*x, data))
    for _ in range(max_iter):
        g, h, _ = loglik_derivatives(*x, data)
        if np.max(np.abs(g)) < gtol:
            return x
        try:
            np.linalg.cholesky(-h)
        except np.linalg.LinAlgError:
            return None
        step = np.linalg.solve(h, -g)
        t = 1.0
        while t > 1e-6:
            cand = x + t * step
            if cand[0] > 0 and cand[1] > 0 and beta_bounds[0] <= cand[2] <= beta_bounds[1]:
                fc = float(loglik(*cand, data))
                if fc >= f - 1e-12 * abs(f):
                    break
            t *= 0.5
        else:
            return None
        x, f = cand, fc
    g, _, _ = loglik_derivatives(*x, data)
    return x if np.max(np.abs(g)) < 1e-6 else None
