"""Scenario files, experiment reports, and report writers.

A scenario is a flat key/value + sections text file (INI syntax, no value
interpolation); see the repository README and the shipped ``scenarios/``
directory for the format.  Coefficient entries are expression strings in the
grammar of :mod:`kppspeed.expressions`; they are parsed eagerly so bad
references fail at load time with the offending name.

Reports carry one row per parameter point plus a list of machine-checked
assertions (name, left value, right value, tolerance, verdict); the CSV
writer emits the rows with a stable column order, the JSON writer the whole
report object.
"""

from __future__ import annotations

import configparser
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

from .expressions import ExpressionError
from .fields import CellGeometry, CoefficientSet, FieldError
from .operators import DEFAULT_CAP, Grid, GridError, build_grid

__all__ = ["Scenario", "ScenarioError", "ExperimentReport", "Assertion",
           "load_scenario", "write_report"]


class ScenarioError(ValueError):
    pass


@dataclass
class Scenario:
    name: str
    experiment: str | None
    geometry: CellGeometry
    coefficients: CoefficientSet
    grid: Grid
    params: dict
    options: dict            # raw [experiment] section (strings)
    seed: int
    output_dir: str
    output_format: str
    jobs: int = 1
    path: str | None = None

    def opt_float(self, key: str, default: float) -> float:
        return float(self.options.get(key, default))

    def opt_floats(self, key: str, default) -> list[float]:
        raw = self.options.get(key)
        if raw is None:
            return list(default)
        return [float(tok) for tok in str(raw).split()]

    def opt_int(self, key: str, default: int) -> int:
        return int(self.options.get(key, default))

    def opt_str(self, key: str, default: str) -> str:
        return str(self.options.get(key, default))


def _parse_floats(text: str) -> tuple[float, ...]:
    return tuple(float(tok) for tok in str(text).split())


def load_scenario(path) -> Scenario:
    """Parse and validate a scenario file (expressions parsed eagerly)."""
    path = Path(path)
    if not path.exists():
        raise ScenarioError(f"scenario file not found: {path}")
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str  # parameter names are case-sensitive
    try:
        cp.read(path)
    except configparser.Error as exc:
        raise ScenarioError(f"{path}: {exc}") from exc

    sc = cp["scenario"] if cp.has_section("scenario") else {}
    name = sc.get("name", path.stem)
    experiment = sc.get("experiment")
    seed = int(sc.get("seed", 0))
    jobs = int(sc.get("jobs", 1))

    geo_sec = cp["geometry"] if cp.has_section("geometry") else {}
    T = float(geo_sec.get("T", 1.0))
    L = _parse_floats(geo_sec.get("L", "1.0"))
    try:
        geometry = CellGeometry(T, L)
    except FieldError as exc:
        raise ScenarioError(f"{path} [geometry]: {exc}") from exc

    params = {}
    if cp.has_section("parameters"):
        for key, val in cp["parameters"].items():
            try:
                params[key] = float(val)
            except ValueError as exc:
                raise ScenarioError(
                    f"{path} [parameters] {key}: not a number ({val!r})") from exc

    co = {k.lower(): v for k, v in cp["coefficients"].items()} \
        if cp.has_section("coefficients") else {}
    N = geometry.dimension
    a_keys = {k: v for k, v in co.items() if k.startswith("a") and k != "a"}
    A_spec = dict(a_keys) if a_keys else co.get("a", "1")
    if N == 1:
        q_spec = (co.get("q", co.get("q1", "0")),)
    else:
        q_spec = tuple(co.get(f"q{i + 1}", "0") for i in range(N))
    mu_spec = co.get("mu", "1")
    try:
        coefficients = CoefficientSet.from_expressions(
            A=A_spec, q=q_spec, mu=mu_spec, T=T, L=(L[0] if N == 1 else L),
            params=params)
    except (ExpressionError, FieldError) as exc:
        raise ScenarioError(f"{path} [coefficients]: {exc}") from exc

    gr = cp["grid"] if cp.has_section("grid") else {}
    n_space = tuple(int(tok) for tok in str(gr.get("n", "256")).split())
    if len(n_space) == 1 and N > 1:
        n_space = n_space * N
    n_t = gr.get("nt")
    cap = int(gr.get("cap", DEFAULT_CAP))
    try:
        grid = build_grid(geometry, n_space, None if n_t is None else int(n_t), cap=cap)
    except GridError as exc:
        raise ScenarioError(f"{path} [grid]: {exc}") from exc

    options = dict(cp["experiment"]) if cp.has_section("experiment") else {}
    out = cp["output"] if cp.has_section("output") else {}
    output_dir = out.get("dir", "out")
    output_format = out.get("format", "csv")
    if output_format not in ("csv", "json", "both"):
        raise ScenarioError(f"{path} [output]: format must be csv|json|both")

    return Scenario(name, experiment, geometry, coefficients, grid, params,
                    options, seed, output_dir, output_format, jobs, str(path))


# --- reports -------------------------------------------------------------------


@dataclass
class Assertion:
    name: str
    kind: str          # "ge" | "le" | "abs" | "strict"
    lhs: float
    rhs: float
    tolerance: float
    verdict: str
    margin: float

    @staticmethod
    def check(name: str, kind: str, lhs: float, rhs: float, tolerance: float,
              equality: bool = False) -> "Assertion":
        lhs, rhs, tolerance = float(lhs), float(rhs), float(tolerance)
        if kind == "ge":          # lhs >= rhs - tolerance
            margin = lhs - rhs
            ok = margin >= -tolerance
        elif kind == "le":        # lhs <= rhs + tolerance
            margin = rhs - lhs
            ok = margin >= -tolerance
        elif kind == "abs":       # |lhs - rhs| <= tolerance
            margin = tolerance - abs(lhs - rhs)
            ok = margin >= 0
        elif kind == "strict":    # lhs - rhs >= tolerance
            margin = lhs - rhs
            ok = margin >= tolerance
        else:
            raise ValueError(f"unknown assertion kind {kind!r}")
        verdict = ("PASS-EQUALITY" if equality else "PASS") if ok else "FAIL"
        return Assertion(name, kind, lhs, rhs, tolerance, verdict, float(margin))


@dataclass
class ExperimentReport:
    experiment: str
    scenario: str
    inputs: dict
    columns: list
    rows: list
    assertions: list            # list[Assertion]
    seed: int
    elapsed_seconds: float = 0.0
    eigen_records: list = field(default_factory=list)  # runtime-only, not serialized

    @property
    def passed(self) -> bool:
        return all(a.verdict != "FAIL" for a in self.assertions)

    def record_eigen(self, context: str, result) -> None:
        self.eigen_records.append({"context": context, "k": result.k,
                                   "lower": result.lower, "upper": result.upper})

    def record_speed(self, context: str, speed_result) -> None:
        if speed_result.eigen is not None:
            self.record_eigen(context + ":minimizer", speed_result.eigen)
        for rec in speed_result.records:
            self.eigen_records.append({"context": context, "k": rec["k"],
                                       "lower": rec["lower"], "upper": rec["upper"]})

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "scenario": self.scenario,
            "inputs": self.inputs,
            "columns": list(self.columns),
            "rows": [dict(r) for r in self.rows],
            "assertions": [vars(a) for a in self.assertions],
            "seed": self.seed,
            "elapsed_seconds": self.elapsed_seconds,
            "passed": self.passed,
        }

    def summary_lines(self) -> list[str]:
        lines = [f"experiment {self.experiment} ({self.scenario}): "
                 f"{len(self.rows)} rows, seed {self.seed}, "
                 f"{self.elapsed_seconds:.2f}s"]
        for a in self.assertions:
            lines.append(f"  [{a.verdict}] {a.name}: lhs={a.lhs:.9g} rhs={a.rhs:.9g} "
                         f"tol={a.tolerance:.3g} margin={a.margin:.3g}")
        return lines


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_report(report: ExperimentReport, fmt: str, out_dir) -> list[Path]:
    """Write CSV rows and/or the JSON report; returns the written paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    base = report.scenario or report.experiment
    if fmt in ("csv", "both"):
        p = out_dir / f"{base}.csv"
        with open(p, "w") as fh:
            fh.write(",".join(report.columns) + "\n")
            for row in report.rows:
                fh.write(",".join(_fmt(row.get(c, "")) for c in report.columns) + "\n")
        written.append(p)
    if fmt in ("json", "both"):
        p = out_dir / f"{base}.json"
        with open(p, "w") as fh:
            json.dump(report.to_dict(), fh, indent=2)
            fh.write("\n")
        written.append(p)
    return written


class timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0
        return False
