"""Choice of the stress-change time by minimising the summed posterior CV.

For each candidate ``tau1`` complete CEM samples are simulated, the MLE
and Lindley moments are computed per replication, posterior variances
and means are averaged over valid replications, and the coefficients of
variation of alpha, theta1 and theta2 are summed.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .cem import Complete, StepStressParams, apply_censoring, cem_sample
from .errors import (
    DegenerateDataError,
    DesignInfeasibleError,
    NumericalError,
    UnstableDesignError,
    ValidationError,
)
from .ge_dist import RngStream
from .lindley import build_workspace, posterior_moment
from .mle import fit_mle
from .posterior import VAGUE_PRIOR, PriorHyper

__all__ = [
    "DesignConfig",
    "DesignPoint",
    "cv_sum_at_tau",
    "optimize_tau",
    "default_tau_grid",
    "write_curve_csv",
    "MIN_VALID",
]

MIN_VALID = 10
PARAMS = ("alpha", "theta1", "theta2")


def default_tau_grid(lo: float = 0.4, hi: float = 16.0, step: float = 0.2) -> list[float]:
    """Grid ``lo, lo+step, ..., hi`` rounded to the step's decimals."""
    k = int(math.floor((hi - lo) / step + 1e-9))
    return [round(lo + i * step, 10) for i in range(k + 1)]


@dataclass(frozen=True)
class DesignConfig:
    """``params.tau1`` is ignored; the candidate times come from ``tau_grid``."""

    alpha: float
    theta1: float
    theta2: float
    n: int
    tau_grid: tuple = field(default_factory=lambda: tuple(default_tau_grid()))
    reps: int = 200
    prior: PriorHyper = VAGUE_PRIOR
    seed: int = 0

    def __post_init__(self):
        grid = tuple(float(t) for t in self.tau_grid)
        object.__setattr__(self, "tau_grid", grid)
        if not grid:
            raise ValidationError("tau_grid must be nonempty")
        if any(t <= 0 for t in grid) or any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValidationError("tau_grid must be positive and strictly increasing")
        if self.reps < 1:
            raise ValidationError("reps must be >= 1")
        if self.n < 2:
            raise ValidationError("n must be >= 2")
        self.params(grid[0])

    def params(self, tau1: float) -> StepStressParams:
        return StepStressParams(self.alpha, self.theta1, self.theta2, tau1)


@dataclass(frozen=True)
class DesignPoint:
    tau1: float
    cv_sum: float
    n_valid: int
    variances: dict
    means: dict
    n_boundary: int = 0
    n_clamped: int = 0
    n_failed: int = 0

    @property
    def stable(self) -> bool:
        return math.isfinite(self.cv_sum)


def _replicate(cfg: DesignConfig, tau1: float, rep: int):
    """Lindley moments for one replication, or a reason string."""
    # The stream depends on the replication only, so every tau1 reuses
    # the same uniforms (common random numbers across the grid).
    rng = RngStream(cfg.seed).substream(rep)
    p = cfg.params(tau1)
    data = apply_censoring(cem_sample(p, cfg.n, rng), cfg.n, tau1, Complete())
    try:
        mle = fit_mle(data)
        if mle.boundary:
            return "boundary"
        ws = build_workspace(mle, data, cfg.prior)
    except (NumericalError, DegenerateDataError):
        return "failed"
    moments = {k: posterior_moment(ws, k) for k in PARAMS}
    if any(m.clamped for m in moments.values()):
        return "clamped"
    return moments


def cv_sum_at_tau(cfg: DesignConfig, tau1: float) -> DesignPoint:
    var = {k: [] for k in PARAMS}
    mean = {k: [] for k in PARAMS}
    counts = {"boundary": 0, "clamped": 0, "failed": 0}
    for rep in range(cfg.reps):
        out = _replicate(cfg, tau1, rep)
        if isinstance(out, str):
            counts[out] += 1
            continue
        for k in PARAMS:
            var[k].append(out[k].variance)
            mean[k].append(out[k].mean)
    n_valid = len(var["alpha"])
    if n_valid < MIN_VALID:
        raise UnstableDesignError(
            f"only {n_valid} valid replications at tau1={tau1} (need {MIN_VALID})"
        )
    avg_var = {k: math.fsum(v) / n_valid for k, v in var.items()}
    avg_mean = {k: math.fsum(v) / n_valid for k, v in mean.items()}
    if any(m <= 0 for m in avg_mean.values()):
        raise UnstableDesignError(f"non-positive averaged posterior mean at tau1={tau1}")
    cv = math.fsum(math.sqrt(avg_var[k]) / avg_mean[k] for k in PARAMS)
    return DesignPoint(
        tau1, cv, n_valid, avg_var, avg_mean, counts["boundary"], counts["clamped"], counts["failed"]
    )


def optimize_tau(cfg: DesignConfig, progress=None):
    """``(tau_opt, curve)``; unstable grid points appear in the curve with NaN cv_sum."""
    curve = []
    for i, tau1 in enumerate(cfg.tau_grid):
        try:
            pt = cv_sum_at_tau(cfg, tau1)
        except UnstableDesignError:
            pt = DesignPoint(tau1, math.nan, 0, {}, {})
        curve.append(pt)
        if progress is not None:
            progress(i, pt)
    stable = [pt for pt in curve if pt.stable]
    if not stable:
        raise DesignInfeasibleError("no grid point has enough valid replications")
    best = min(stable, key=lambda pt: (pt.cv_sum, pt.tau1))
    return best.tau1, curve


def write_curve_csv(curve, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(
            ["tau1", "cv_sum", "n_valid", "var_alpha", "var_theta1", "var_theta2",
             "mean_alpha", "mean_theta1", "mean_theta2", "n_boundary", "n_clamped", "n_failed"]
        )
        for pt in curve:
            w.writerow(
                [repr(pt.tau1), repr(pt.cv_sum), pt.n_valid]
                + [repr(pt.variances.get(k, math.nan)) for k in PARAMS]
                + [repr(pt.means.get(k, math.nan)) for k in PARAMS]
                + [pt.n_boundary, pt.n_clamped, pt.n_failed]
            )


def curve_arrays(curve):
    """``(tau1, cv_sum)`` numpy arrays; convenient for plotting."""
    return np.array([pt.tau1 for pt in curve]), np.array([pt.cv_sum for pt in curve])
