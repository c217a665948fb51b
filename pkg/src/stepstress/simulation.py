"""Monte Carlo driver for the estimation tables.

Each replication simulates a CEM sample, censors it, draws an importance
sample and records Bayes estimates plus left, symmetric and HPD
intervals for alpha, theta1 and theta2.  Aggregation uses ``math.fsum``
over replications taken in index order, so the result does not depend
on how replications are spread over worker processes.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .cem import CensoringSpec, Complete, StepStressParams, apply_censoring, cem_sample
from .errors import StepStressError, ValidationError
from .ge_dist import RngStream
from .posterior import (
    DEFAULT_N,
    KINDS,
    VAGUE_PRIOR,
    PriorHyper,
    bayes_estimate,
    credible_interval,
    draw_importance_sample,
    sorted_weights,
)

__all__ = [
    "ExperimentConfig",
    "ExperimentRow",
    "run_experiment",
    "run_table",
    "write_table_csv",
    "write_table_json",
    "MAX_REDRAWS",
]

PARAMS = ("alpha", "theta1", "theta2")
MAX_REDRAWS = 100


@dataclass(frozen=True)
class ExperimentConfig:
    truth: StepStressParams
    n: int
    spec: CensoringSpec = field(default_factory=Complete)
    reps: int = 1000
    N: int = DEFAULT_N
    prior: PriorHyper = VAGUE_PRIOR
    gamma: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.reps < 1:
            raise ValidationError("reps must be >= 1")
        if self.N < 2:
            raise ValidationError("N must be >= 2")
        if not 0 < self.gamma < 1:
            raise ValidationError("gamma must lie in (0, 1)")
        if self.n < 1:
            raise ValidationError("n must be >= 1")

    def describe(self) -> dict:
        spec = {"scheme": self.spec.name, **asdict(self.spec)}
        return {
            "alpha": self.truth.alpha,
            "theta1": self.truth.theta1,
            "theta2": self.truth.theta2,
            "tau1": self.truth.tau1,
            "n": self.n,
            **spec,
            "reps": self.reps,
            "N": self.N,
            "gamma": self.gamma,
            "seed": self.seed,
            "prior": self.prior.as_dict(),
        }


@dataclass
class ExperimentRow:
    config: ExperimentConfig
    ae: dict
    mse: dict
    cp: dict  # (kind, param) -> percent
    al: dict  # (kind, param) -> mean length
    reps_used: int
    n_redrawn: int = 0
    n_failed: int = 0
    mean_ess: float = math.nan
    error: str = ""

    def as_dict(self) -> dict:
        return {
            "config": self.config.describe(),
            "ae": self.ae,
            "mse": self.mse,
            "cp": {f"{k}:{p}": v for (k, p), v in self.cp.items()},
            "al": {f"{k}:{p}": v for (k, p), v in self.al.items()},
            "reps_used": self.reps_used,
            "n_redrawn": self.n_redrawn,
            "n_failed": self.n_failed,
            "mean_ess": self.mean_ess,
            "error": self.error,
        }


def _one_replication(cfg: ExperimentConfig, rep: int):
    """Estimates and intervals for replication ``rep``.

    Returns ``(estimates, intervals, ess, redraws)`` or ``(None, reason, nan, redraws)``.
    """
    base = RngStream(cfg.seed).substream(rep)
    truth = cfg.truth
    for attempt in range(MAX_REDRAWS + 1):
        sub = base.substream(attempt)
        full = cem_sample(truth, cfg.n, sub.substream(0))
        data = apply_censoring(full, cfg.n, truth.tau1, cfg.spec)
        if not data.degenerate:
            break
    else:
        return None, "degenerate after redraws", math.nan, MAX_REDRAWS
    try:
        sample = draw_importance_sample(data, cfg.prior, cfg.N, sub.substream(1))
        est = {p: bayes_estimate(sample, p) for p in PARAMS}
        ints = {}
        for p in PARAMS:
            srt = sorted_weights(sample, p)
            for kind in KINDS:
                ints[(kind, p)] = credible_interval(sample, p, cfg.gamma, kind, _sorted=srt)
    except StepStressError as exc:
        return None, f"{type(exc).__name__}: {exc}", math.nan, attempt
    return est, ints, sample.ess, attempt


def _run_chunk(args):
    cfg, reps = args
    return [_one_replication(cfg, r) for r in reps]


def run_experiment(cfg: ExperimentConfig, workers: int = 1) -> ExperimentRow:
    reps = list(range(cfg.reps))
    if workers > 1:
        chunks = [reps[i::workers] for i in range(workers)]
        with ProcessPoolExecutor(workers) as ex:
            parts = list(ex.map(_run_chunk, [(cfg, c) for c in chunks]))
        results = [None] * cfg.reps
        for c, part in zip(chunks, parts):
            for r, res in zip(c, part):
                results[r] = res
    else:
        results = _run_chunk((cfg, reps))

    good = [r for r in results if r[0] is not None]
    n_redrawn = sum(r[3] for r in results)
    n_failed = len(results) - len(good)
    m = len(good)
    truth = {"alpha": cfg.truth.alpha, "theta1": cfg.truth.theta1, "theta2": cfg.truth.theta2}
    if m == 0:
        nan = {p: math.nan for p in PARAMS}
        return ExperimentRow(cfg, nan, dict(nan), {}, {}, 0, n_redrawn, n_failed, math.nan,
                             "every replication failed")
    ae = {p: math.fsum(r[0][p] for r in good) / m for p in PARAMS}
    mse = {p: math.fsum((r[0][p] - truth[p]) ** 2 for r in good) / m for p in PARAMS}
    cp, al = {}, {}
    for kind in KINDS:
        for p in PARAMS:
            key = (kind, p)
            cp[key] = 100.0 * sum(r[1][key].covers(truth[p]) for r in good) / m
            al[key] = math.fsum(r[1][key].length for r in good) / m
    mean_ess = math.fsum(r[2] for r in good) / m
    return ExperimentRow(cfg, ae, mse, cp, al, m, n_redrawn, n_failed, mean_ess)


def run_table(configs, workers: int = 1) -> list[ExperimentRow]:
    """Rows in input order; a failing row carries its error instead of aborting."""
    configs = list(configs)
    if not configs:
        raise ValidationError("need at least one experiment config")
    rows = []
    for cfg in configs:
        try:
            rows.append(run_experiment(cfg, workers))
        except StepStressError as exc:
            nan = {p: math.nan for p in PARAMS}
            rows.append(ExperimentRow(cfg, nan, dict(nan), {}, {}, 0, error=str(exc)))
    return rows


def _design_columns(cfg: ExperimentConfig):
    spec = cfg.spec
    return [cfg.n, cfg.truth.tau1, spec.name, getattr(spec, "tau2", ""), getattr(spec, "r", "")]


def write_table_csv(rows, path) -> None:
    """Write rows to a path or an open text file."""
    if hasattr(path, "write"):
        _write_table(rows, path)
    else:
        with open(path, "w", newline="") as fh:
            _write_table(rows, fh)


def _write_table(rows, fh) -> None:
    head = ["n", "tau1", "scheme", "tau2", "r"]
    for p in PARAMS:
        head += [f"AE_{p}", f"MSE_{p}"]
    for kind in KINDS:
        for p in PARAMS:
            head += [f"CP_{kind}_{p}", f"AL_{kind}_{p}"]
    head += ["reps_used", "n_redrawn", "n_failed", "mean_ess", "error"]
    w = csv.writer(fh)
    w.writerow(head)
    for row in rows:
        line = _design_columns(row.config)
        for p in PARAMS:
            line += [repr(row.ae[p]), repr(row.mse[p])]
        for kind in KINDS:
            for p in PARAMS:
                line += [repr(row.cp.get((kind, p), math.nan)), repr(row.al.get((kind, p), math.nan))]
        line += [row.reps_used, row.n_redrawn, row.n_failed, repr(row.mean_ess), row.error]
        w.writerow(line)


def write_table_json(rows, path) -> None:
    with open(path, "w") as fh:
        json.dump([r.as_dict() for r in rows], fh, indent=2, default=_json_default)


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(f"not JSON serializable: {type(obj)}")
