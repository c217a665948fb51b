"""Dataset and config files, posterior-sample persistence, bundled fixtures.

Dataset files are CSV with ``# key: value`` metadata lines, a ``time``
header and one observed failure time per row::

    # label: example
    # tau1: 5
    # n: 20
    # scheme: type1
    # tau2: 8
    time
    0.0185
    ...

Run configs are INI files with a single ``[run]`` section (the header may
be omitted) of ``key = value`` pairs.
"""

from __future__ import annotations

import configparser
import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .cem import Complete, HybridI, HybridII, ObservedData, TypeI, TypeII, apply_censoring
from .errors import StepStressError, ValidationError
from .posterior import PosteriorSample

__all__ = [
    "DataFormatError",
    "Dataset",
    "load_dataset",
    "parse_dataset",
    "dump_dataset",
    "fixture_path",
    "load_fixture",
    "RunConfig",
    "ConfigKey",
    "load_config",
    "save_posterior_sample",
    "load_posterior_sample",
    "FileIOError",
    "FIXTURES",
]


class DataFormatError(ValidationError):
    def __init__(self, message: str, line: int | None = None, source: str = "<data>"):
        self.line = line
        where = f"{source}:{line}: " if line is not None else f"{source}: "
        super().__init__(where + message)


class FileIOError(StepStressError):
    exit_code = 5


_SCHEMES = {"complete", "type1", "type2", "hybrid1", "hybrid2"}


@dataclass(frozen=True)
class Dataset:
    times: tuple
    tau1: float
    n: int
    scheme: str = "complete"
    tau2: float | None = None
    r: int | None = None
    label: str = ""

    def spec(self):
        if self.scheme == "complete":
            return Complete()
        if self.scheme == "type1":
            return TypeI(self.tau2)
        if self.scheme == "type2":
            return TypeII(self.r)
        if self.scheme == "hybrid1":
            return HybridI(self.r, self.tau2)
        return HybridII(self.r, self.tau2)

    def observed(self) -> ObservedData:
        full = np.sort(np.asarray(self.times, dtype=float))
        data = apply_censoring(full, self.n, self.tau1, self.spec())
        if data.n_star != full.size:
            raise ValidationError(
                f"{full.size - data.n_star} listed time(s) fall after the termination time {data.tau_star}"
            )
        return data

    def metadata(self) -> dict:
        out = {"label": self.label, "tau1": self.tau1, "n": self.n, "scheme": self.scheme}
        if self.tau2 is not None:
            out["tau2"] = self.tau2
        if self.r is not None:
            out["r"] = self.r
        return out


def _meta_float(meta, key, line, source):
    try:
        v = float(meta[key])
    except ValueError:
        raise DataFormatError(f"{key} must be a number, got {meta[key]!r}", line, source) from None
    if not (math.isfinite(v) and v > 0):
        raise DataFormatError(f"{key} must be positive", line, source)
    return v


def _meta_int(meta, key, line, source):
    try:
        v = int(meta[key])
    except ValueError:
        raise DataFormatError(f"{key} must be an integer, got {meta[key]!r}", line, source) from None
    if v < 1:
        raise DataFormatError(f"{key} must be >= 1", line, source)
    return v


def parse_dataset(text: str, source: str = "<data>") -> Dataset:
    meta, meta_line = {}, {}
    times, seen_header = [], False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if ":" not in body:
                continue  # free comment
            key, value = (s.strip() for s in body.split(":", 1))
            key = key.lower()
            if key not in {"label", "tau1", "n", "scheme", "tau2", "r"}:
                raise DataFormatError(f"unknown metadata key {key!r}", lineno, source)
            meta[key], meta_line[key] = value, lineno
            continue
        if not seen_header:
            if line.lower() != "time":
                raise DataFormatError(f"expected header 'time', got {line!r}", lineno, source)
            seen_header = True
            continue
        try:
            t = float(line)
        except ValueError:
            raise DataFormatError(f"not a number: {line!r}", lineno, source) from None
        if not (math.isfinite(t) and t > 0):
            raise DataFormatError(f"failure times must be positive and finite, got {line!r}", lineno, source)
        times.append((t, lineno))
    if not seen_header:
        raise DataFormatError("missing 'time' header", None, source)
    if "tau1" not in meta:
        raise DataFormatError("missing '# tau1:' metadata", None, source)
    tau1 = _meta_float(meta, "tau1", meta_line["tau1"], source)
    scheme = meta.get("scheme", "complete").lower()
    if scheme not in _SCHEMES:
        raise DataFormatError(f"unknown scheme {scheme!r}", meta_line.get("scheme"), source)
    seen = {}
    for t, ln in times:
        if t in seen:
            raise DataFormatError(f"duplicate failure time {t} (also on line {seen[t]})", ln, source)
        seen[t] = ln
    n = _meta_int(meta, "n", meta_line["n"], source) if "n" in meta else len(times)
    tau2 = r = None
    if scheme in {"type1", "hybrid1", "hybrid2"}:
        if "tau2" not in meta:
            raise DataFormatError(f"scheme {scheme} needs '# tau2:'", None, source)
        tau2 = _meta_float(meta, "tau2", meta_line["tau2"], source)
    if scheme in {"type2", "hybrid1", "hybrid2"}:
        if "r" not in meta:
            raise DataFormatError(f"scheme {scheme} needs '# r:'", None, source)
        r = _meta_int(meta, "r", meta_line["r"], source)
    ds = Dataset(tuple(t for t, _ in times), tau1, n, scheme, tau2, r, meta.get("label", ""))
    try:
        ds.observed()
    except ValidationError as exc:
        raise DataFormatError(str(exc), None, source) from None
    return ds


def load_dataset(path) -> Dataset:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise FileIOError(f"cannot read dataset {path}: {exc.strerror or exc}") from exc
    return parse_dataset(text, str(path))


def dump_dataset(ds: Dataset) -> str:
    lines = [f"# {k}: {v}" for k, v in ds.metadata().items() if v != ""]
    lines.append("time")
    lines += [repr(float(t)) for t in ds.times]
    return "\n".join(lines) + "\n"


FIXTURES = {
    "sim1_type1": "sim1_type1.csv",
    "sim1_type2": "sim1_type2.csv",
    "sim2_type1": "sim2_type1.csv",
    "sim2_type2": "sim2_type2.csv",
    "solar": "solar.csv",
}


def fixture_path(name: str) -> Path:
    if name not in FIXTURES:
        raise ValidationError(f"unknown fixture {name!r}; choose from {sorted(FIXTURES)}")
    return Path(str(resources.files("stepstress") / "data" / FIXTURES[name]))


def load_fixture(name: str) -> Dataset:
    return load_dataset(fixture_path(name))


# --------------------------------------------------------------------- config


@dataclass(frozen=True)
class ConfigKey:
    type: type
    default: object
    doc: str


def _float_list(s: str) -> tuple:
    return tuple(float(x) for x in s.replace(" ", "").split(",") if x)


_TYPES = {float: float, int: int, str: str, tuple: _float_list}


class RunConfig:
    """Resolved key/value settings for one command.

    ``schema`` maps each accepted key to its type, default and doc
    string; keys outside it are rejected.
    """

    def __init__(self, schema: dict, values: dict | None = None, source: str = "<config>"):
        self.schema = schema
        self.source = source
        self.values = {k: spec.default for k, spec in schema.items()}
        for key, raw in (values or {}).items():
            self.set(key, raw)

    def set(self, key: str, raw):
        if key not in self.schema:
            raise ValidationError(f"{self.source}: unknown config key {key!r}; accepted: {sorted(self.schema)}")
        spec = self.schema[key]
        if isinstance(raw, str):
            try:
                raw = _TYPES[spec.type](raw)
            except ValueError:
                raise ValidationError(f"{self.source}: bad value for {key!r}: {raw!r}") from None
        self.values[key] = raw

    def __getitem__(self, key):
        return self.values[key]

    def as_dict(self) -> dict:
        return dict(self.values)


def load_config(path, schema: dict) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise FileIOError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    if not text.lstrip().startswith("["):
        text = "[run]\n" + text
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ValidationError(f"{path}: {exc}") from None
    extra = [s for s in parser.sections() if s != "run"]
    if extra:
        raise ValidationError(f"{path}: unknown section(s) {extra}; use [run]")
    values = dict(parser["run"]) if parser.has_section("run") else {}
    return RunConfig(schema, values, str(path))


# ----------------------------------------------------------- posterior samples


def save_posterior_sample(sample: PosteriorSample, path) -> None:
    """CSV with a JSON metadata line; floats written with ``repr`` so reload is exact."""
    path = Path(path)
    try:
        with open(path, "w") as fh:
            fh.write("# meta: " + json.dumps(sample.meta, sort_keys=True) + "\n")
            fh.write("beta,theta2,alpha,log_weight\n")
            for row in zip(sample.beta, sample.theta2, sample.alpha, sample.log_weight):
                fh.write(",".join(repr(float(v)) for v in row) + "\n")
    except OSError as exc:
        raise FileIOError(f"cannot write {path}: {exc.strerror or exc}") from exc


def load_posterior_sample(path) -> PosteriorSample:
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise FileIOError(f"cannot read {path}: {exc.strerror or exc}") from exc
    meta = {}
    body = []
    for lineno, line in enumerate(lines, start=1):
        if line.startswith("# meta:"):
            meta = json.loads(line[len("# meta:"):])
        elif line.startswith("#") or not line.strip():
            continue
        elif line.startswith("beta,"):
            continue
        else:
            parts = line.split(",")
            if len(parts) != 4:
                raise DataFormatError("expected 4 columns", lineno, str(path))
            try:
                body.append([float(p) for p in parts])
            except ValueError:
                raise DataFormatError(f"not a number in {line!r}", lineno, str(path)) from None
    arr = np.array(body, dtype=float).reshape(-1, 4)
    return PosteriorSample(arr[:, 0].copy(), arr[:, 1].copy(), arr[:, 2].copy(), arr[:, 3].copy(), meta)
