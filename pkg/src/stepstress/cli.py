"""Command-line interface: ``stepstress {estimate,simulate,optimize,gof,sample-posterior}``.

Every command prints (or writes to ``--out``) a report that starts with
its fully resolved configuration, so any output can be regenerated from
its own header.  Exit codes: 0 ok, 2 validation, 3 degenerate data,
4 numerical failure, 5 I/O, 6 finished but the MLE is boundary-flagged,
7 no stable point on the design grid.
"""

from __future__ import annotations

import argparse
import csv
import io as _io
import json
import math
import secrets
import sys
from pathlib import Path

from . import __version__
from .cem import Complete, HybridI, HybridII, StepStressParams, TypeI, TypeII
from .design import DesignConfig, optimize_tau, default_tau_grid, write_curve_csv
from .errors import DesignInfeasibleError, StepStressError, ValidationError
from .ge_dist import RngStream
from .gof import ks_test
from .io import (
    ConfigKey,
    FileIOError,
    RunConfig,
    fixture_path,
    load_config,
    load_dataset,
    save_posterior_sample,
)
from .mle import fit_mle
from .posterior import (
    KINDS,
    PriorHyper,
    bayes_estimate,
    credible_interval,
    draw_importance_sample,
    sorted_weights,
)
from .simulation import ExperimentConfig, run_table, write_table_csv, write_table_json

EXIT_BOUNDARY = 6
EXIT_DESIGN_INFEASIBLE = DesignInfeasibleError.exit_code
PARAMS = ("alpha", "theta1", "theta2", "beta")

_PRIOR_KEYS = {
    "a0": ConfigKey(float, 1e-4, "rate of the Gamma prior on alpha"),
    "b0": ConfigKey(float, 1e-4, "shape of the Gamma prior on alpha"),
    "a1": ConfigKey(float, 1e-4, "rate of the Gamma prior on theta2"),
    "b1": ConfigKey(float, 1e-4, "shape of the Gamma prior on theta2"),
    "a2": ConfigKey(float, 1.0, "first Beta parameter of the prior on beta"),
    "b2": ConfigKey(float, 1.0, "second Beta parameter of the prior on beta"),
}
_SEED = {"seed": ConfigKey(int, None, "master seed; generated and echoed when absent")}
_N = {"N": ConfigKey(int, 15000, "importance sample size")}

SCHEMAS = {
    "estimate": {
        **_SEED, **_N, **_PRIOR_KEYS,
        "levels": ConfigKey(tuple, (0.90, 0.95, 0.99), "credible levels"),
    },
    "sample-posterior": {**_SEED, **_N, **_PRIOR_KEYS},
    "gof": {
        **_SEED, **_N, **_PRIOR_KEYS,
        "source": ConfigKey(str, "both", "fitted parameters: bayes, mle, manual or both"),
        "alpha": ConfigKey(float, None, "manual alpha"),
        "theta1": ConfigKey(float, None, "manual theta1"),
        "theta2": ConfigKey(float, None, "manual theta2"),
    },
    "simulate": {
        **_SEED, **_N, **_PRIOR_KEYS,
        "preset": ConfigKey(str, "", "'benchmark' runs every benchmark simulation configuration"),
        "alpha": ConfigKey(float, 0.6, "true alpha"),
        "theta1": ConfigKey(float, 0.1, "true theta1"),
        "theta2": ConfigKey(float, 0.2, "true theta2"),
        "tau1": ConfigKey(float, 9.0, "stress-change time"),
        "n": ConfigKey(int, 50, "units on test"),
        "scheme": ConfigKey(str, "complete", "complete, type1, type2, hybrid1 or hybrid2"),
        "tau2": ConfigKey(float, None, "censoring time"),
        "r": ConfigKey(int, None, "censoring failure count"),
        "reps": ConfigKey(int, 200, "replications per configuration"),
        "gamma": ConfigKey(float, 0.05, "interval tail probability"),
    },
    "optimize": {
        **_SEED, **_PRIOR_KEYS,
        "preset": ConfigKey(str, "", "'design-cases' sweeps the twelve benchmark design cases"),
        "alpha": ConfigKey(float, 0.6, "true alpha"),
        "theta1": ConfigKey(float, 0.1, "true theta1"),
        "theta2": ConfigKey(float, 0.2, "true theta2"),
        "n": ConfigKey(int, 20, "units on test"),
        "tau_lo": ConfigKey(float, 0.4, "smallest candidate tau1"),
        "tau_hi": ConfigKey(float, 16.0, "largest candidate tau1"),
        "tau_step": ConfigKey(float, 0.2, "grid step"),
        "reps": ConfigKey(int, 200, "replications per grid point"),
    },
}


def _prior(cfg: RunConfig) -> PriorHyper:
    return PriorHyper(*(cfg[k] for k in ("a0", "b0", "a1", "b1", "a2", "b2")))


def _resolve(args, command: str) -> RunConfig:
    schema = SCHEMAS[command]
    cfg = load_config(args.config, schema) if args.config else RunConfig(schema)
    if args.seed is not None:
        cfg.set("seed", args.seed)
    if cfg["seed"] is None:
        seed = secrets.randbits(32)
        print(f"seed not given; using generated seed {seed}", file=sys.stderr)
        cfg.set("seed", seed)
    return cfg


def _load_data(args):
    if not args.data:
        raise ValidationError("--data is required (a CSV path or fixture:NAME)")
    path = fixture_path(args.data.split(":", 1)[1]) if args.data.startswith("fixture:") else args.data
    ds = load_dataset(path)
    return ds, ds.observed()


def _emit(args, report: dict, csv_rows: list | None = None):
    if args.format == "csv" and csv_rows is not None:
        buf = _io.StringIO()
        w = csv.writer(buf)
        for row in csv_rows:
            w.writerow(row)
        text = buf.getvalue()
    else:
        text = json.dumps(report, indent=2, default=_json_default) + "\n"
    if args.out:
        try:
            Path(args.out).write_text(text)
        except OSError as exc:
            raise FileIOError(f"cannot write {args.out}: {exc.strerror or exc}") from exc
    else:
        sys.stdout.write(text)


def _json_default(obj):
    if hasattr(obj, "item"):
        return obj.item()
    if isinstance(obj, tuple):
        return list(obj)
    raise TypeError(type(obj))


def _fmt(v) -> str:
    return f"{v:.4f}" if isinstance(v, float) and math.isfinite(v) else str(v)


# ------------------------------------------------------------------ commands


def cmd_estimate(args) -> int:
    cfg = _resolve(args, "estimate")
    ds, data = _load_data(args)
    prior = _prior(cfg)
    sample = draw_importance_sample(data, prior, cfg["N"], RngStream(cfg["seed"]))
    est = {p: bayes_estimate(sample, p) for p in PARAMS}
    intervals, rows = [], [["parameter", "level", "kind", "lower", "upper"]]
    for p in ("alpha", "theta1", "theta2"):
        srt = sorted_weights(sample, p)
        for level in cfg["levels"]:
            for kind in KINDS:
                ci = credible_interval(sample, p, 1.0 - level, kind, _sorted=srt)
                intervals.append({"parameter": p, "level": level, "kind": kind,
                                  "lower": ci.lower, "upper": ci.upper})
                rows.append([p, level, kind, repr(ci.lower), repr(ci.upper)])
    mle = fit_mle(data)
    report = {
        "command": "estimate",
        "version": __version__,
        "config": cfg.as_dict(),
        "data": {**ds.metadata(), "n_star": data.n_star, "n1_star": data.n1_star,
                 "n2_star": data.n2_star, "tau_star": data.tau_star},
        "bayes": est,
        "intervals": intervals,
        "mle": mle.as_dict(),
        "ess": sample.ess,
    }
    print("Bayes estimates: " + "  ".join(f"{p}={_fmt(v)}" for p, v in est.items()), file=sys.stderr)
    print(f"ESS = {sample.ess:.1f} of N = {sample.size}", file=sys.stderr)
    for it in intervals:
        if it["level"] == 0.95:
            print(f"  95% {it['kind']:9s} {it['parameter']:6s} ({_fmt(it['lower'])}, {_fmt(it['upper'])})",
                  file=sys.stderr)
    _emit(args, report, rows)
    if mle.boundary:
        print(f"warning: MLE is boundary-flagged ({mle.reason})", file=sys.stderr)
        return EXIT_BOUNDARY
    return 0


def cmd_sample_posterior(args) -> int:
    cfg = _resolve(args, "sample-posterior")
    _, data = _load_data(args)
    if not args.out:
        raise ValidationError("sample-posterior needs --out for the sample CSV")
    sample = draw_importance_sample(data, _prior(cfg), cfg["N"], RngStream(cfg["seed"]))
    save_posterior_sample(sample, args.out)
    print(json.dumps({"command": "sample-posterior", "config": cfg.as_dict(), "ess": sample.ess,
                      "out": args.out}, indent=2, default=_json_default))
    return 0


def cmd_gof(args) -> int:
    cfg = _resolve(args, "gof")
    _, data = _load_data(args)
    source = cfg["source"]
    if source not in {"bayes", "mle", "manual", "both"}:
        raise ValidationError("source must be bayes, mle, manual or both")
    fits = {}
    if source == "manual":
        if None in (cfg["alpha"], cfg["theta1"], cfg["theta2"]):
            raise ValidationError("manual source needs alpha, theta1 and theta2")
        fits["manual"] = StepStressParams(cfg["alpha"], cfg["theta1"], cfg["theta2"], data.tau1)
    if source in {"bayes", "both"}:
        sample = draw_importance_sample(data, _prior(cfg), cfg["N"], RngStream(cfg["seed"]))
        e = {p: bayes_estimate(sample, p) for p in ("alpha", "theta1", "theta2")}
        fits["bayes"] = StepStressParams(e["alpha"], e["theta1"], e["theta2"], data.tau1)
    if source in {"mle", "both"}:
        m = fit_mle(data)
        fits["mle"] = StepStressParams(m.alpha_hat, m.theta1_hat, m.theta2_hat, data.tau1)
    reports = {}
    rows = [["source", "alpha", "theta1", "theta2", "D", "p_value", "p_value_asymptotic", "n_used"]]
    for name, p in fits.items():
        r = ks_test(data, p)
        reports[name] = {"params": {"alpha": p.alpha, "theta1": p.theta1, "theta2": p.theta2}, **r.as_dict()}
        rows.append([name, repr(p.alpha), repr(p.theta1), repr(p.theta2), repr(r.statistic),
                     repr(r.p_value), repr(r.p_value_asymptotic), r.n_used])
        print(f"{name}: D = {r.statistic:.4f}, p = {r.p_value:.4f} (asymptotic {r.p_value_asymptotic:.4f})",
              file=sys.stderr)
    _emit(args, {"command": "gof", "config": cfg.as_dict(), "reports": reports}, rows)
    return 0


def _spec(scheme, tau2, r):
    if scheme == "complete":
        return Complete()
    if scheme == "type1":
        return TypeI(tau2)
    if scheme == "type2":
        return TypeII(r)
    if scheme == "hybrid1":
        return HybridI(r, tau2)
    if scheme == "hybrid2":
        return HybridII(r, tau2)
    raise ValidationError(f"unknown scheme {scheme!r}")


def benchmark_configs(reps: int, N: int, prior: PriorHyper, seed: int) -> list[ExperimentConfig]:
    """Every configuration behind the complete-data and censored simulation tables."""
    out = []
    for alpha in (0.6, 1.0, 1.5):
        for n in (10, 20, 30, 40, 50):
            for tau in (5.0, 7.0, 9.0):
                out.append(ExperimentConfig(StepStressParams(alpha, 0.1, 0.2, tau), n, Complete(),
                                            reps, N, prior, 0.05, seed))
    for n in (20, 30, 40, 50):
        for tau1, tau2 in ((7.0, 13.0), (9.0, 13.0), (9.0, 15.0)):
            out.append(ExperimentConfig(StepStressParams(1.5, 0.1, 0.2, tau1), n, TypeI(tau2),
                                        reps, N, prior, 0.05, seed))
    type2_r = {20: (15, 15, 17), 30: (23, 23, 27), 40: (32, 32, 36), 50: (42, 42, 45)}
    for n, rs in type2_r.items():
        for tau1, r in zip((7.0, 9.0, 9.0), rs):
            out.append(ExperimentConfig(StepStressParams(1.5, 0.1, 0.2, tau1), n, TypeII(r),
                                        reps, N, prior, 0.05, seed))
    return out


def cmd_simulate(args) -> int:
    cfg = _resolve(args, "simulate")
    prior = _prior(cfg)
    if cfg["reps"] < 1:
        raise ValidationError("reps must be >= 1")
    if cfg["preset"] == "benchmark":
        configs = benchmark_configs(cfg["reps"], cfg["N"], prior, cfg["seed"])
    elif cfg["preset"]:
        raise ValidationError(f"unknown simulate preset {cfg['preset']!r}")
    else:
        truth = StepStressParams(cfg["alpha"], cfg["theta1"], cfg["theta2"], cfg["tau1"])
        configs = [ExperimentConfig(truth, cfg["n"], _spec(cfg["scheme"], cfg["tau2"], cfg["r"]),
                                    cfg["reps"], cfg["N"], prior, cfg["gamma"], cfg["seed"])]
    rows = run_table(configs, workers=args.threads)
    header = {"command": "simulate", "config": cfg.as_dict()}
    if args.out:
        out = Path(args.out)
        try:
            out.mkdir(parents=True, exist_ok=True)
            write_table_csv(rows, out / "table.csv")
            write_table_json(rows, out / "table.json")
            (out / "config.json").write_text(json.dumps(header, indent=2, default=_json_default))
        except OSError as exc:
            raise FileIOError(f"cannot write to {out}: {exc.strerror or exc}") from exc
    elif args.format == "csv":
        write_table_csv(rows, sys.stdout)
    else:
        print(json.dumps({**header, "rows": [r.as_dict() for r in rows]}, indent=2, default=_json_default))
    return 0


DESIGN_CASES = [(a, n) for a in (0.6, 1.0, 1.5) for n in (20, 30, 40, 50)]


def cmd_optimize(args) -> int:
    cfg = _resolve(args, "optimize")
    prior = _prior(cfg)
    grid = tuple(default_tau_grid(cfg["tau_lo"], cfg["tau_hi"], cfg["tau_step"]))
    if cfg["preset"] == "design-cases":
        cases = [(a, 0.1, 0.2, n) for a, n in DESIGN_CASES]
    elif cfg["preset"]:
        raise ValidationError(f"unknown optimize preset {cfg['preset']!r}")
    else:
        cases = [(cfg["alpha"], cfg["theta1"], cfg["theta2"], cfg["n"])]
    results = []
    out = Path(args.out) if args.out else None
    if out is not None:
        try:
            out.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise FileIOError(f"cannot create {out}: {exc.strerror or exc}") from exc
    for a, t1, t2, n in cases:
        dc = DesignConfig(a, t1, t2, n, grid, cfg["reps"], prior, cfg["seed"])
        tau_opt, curve = optimize_tau(dc)
        print(f"alpha={a} n={n}: optimal tau1 = {tau_opt}", file=sys.stderr)
        entry = {"alpha": a, "theta1": t1, "theta2": t2, "n": n, "tau_opt": tau_opt,
                 "curve": [{"tau1": p.tau1, "cv_sum": p.cv_sum, "n_valid": p.n_valid} for p in curve]}
        if out is not None:
            name = f"curve_alpha{a}_n{n}.csv"
            write_curve_csv(curve, out / name)
            entry["curve_csv"] = name
        results.append(entry)
    report = {"command": "optimize", "config": cfg.as_dict(), "results": results}
    if out is not None:
        (out / "optimum.json").write_text(json.dumps(report, indent=2, default=_json_default))
    elif args.format == "csv":
        w = csv.writer(sys.stdout)
        w.writerow(["alpha", "theta1", "theta2", "n", "tau_opt"])
        for e in results:
            w.writerow([e["alpha"], e["theta1"], e["theta2"], e["n"], e["tau_opt"]])
    else:
        print(json.dumps(report, indent=2, default=_json_default))
    return 0


COMMANDS = {
    "estimate": cmd_estimate,
    "simulate": cmd_simulate,
    "optimize": cmd_optimize,
    "gof": cmd_gof,
    "sample-posterior": cmd_sample_posterior,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stepstress", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--data", help="dataset CSV, or fixture:NAME for a bundled fixture")
        p.add_argument("--config", help="key = value config file")
        p.add_argument("--seed", type=int, help="master seed (overrides the config)")
        p.add_argument("--threads", type=int, default=1, help="worker processes; results do not depend on it")
        p.add_argument("--out", help="output file (or directory for simulate/optimize)")
        p.add_argument("--format", choices=("csv", "json"), default="json")
        p.add_argument("--describe-config", action="store_true", help="list accepted config keys and exit")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.describe_config:
        for key, spec in SCHEMAS[args.command].items():
            print(f"{key} = {spec.default!r}    # {spec.doc}")
        return 0
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 2
    try:
        return COMMANDS[args.command](args)
    except StepStressError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 5


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
