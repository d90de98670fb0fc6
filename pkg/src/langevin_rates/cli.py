"""Command-line front end.

Every subcommand takes its parameters from flags and/or a JSON config
file (``--config``) of the form::

    {"command": "rate", "params": {"m": 1, "gamma": 1}, "output_dir": "out", "format": "json"}

Flags override file values and unknown keys are rejected. Results are
printed to stdout as JSON and written to ``output_dir`` (flag, config, or
``$LANGEVIN_RATES_OUTPUT_DIR``, default ``./langevin_rates_out``) under
names derived from a hash of the resolved configuration, together with a
manifest recording that configuration and the toolkit version.

Exit status: 0 on success, 2 for usage or parameter errors, 3 for
numerical failures (non-convergence, divergence, failed fits).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from . import __version__
from .dms import dms_optimize, dms_rate, DmsInputs, r_ham_bound
from .dynamics import (
    FitMode,
    Gaussian,
    IntegratorConfig,
    PointMass,
    fit_decay,
    simulate_ensemble,
)
from .errors import (
    DivergenceError,
    FitFailureError,
    InvalidParameterError,
    LangevinRatesError,
    MissingMetadataError,
    NumericalFailureError,
    UsageError,
)
from .output import atomic_write, config_hash, csv_text, dumps, to_jsonable
from .potentials import load_potential, select_R, with_poincare
from .rates import RateInputs, gamma_sweep, main_rate, optimal_gamma_general
from .spectral import (
    build_generator_hermite,
    matrix_gap,
    poincare_fd,
    quadratic_gap,
    quadratic_spectrum,
)

__all__ = ["RunConfig", "ReportBundle", "report", "run", "main", "COMMANDS", "OUTPUT_DIR_ENV"]

OUTPUT_DIR_ENV = "LANGEVIN_RATES_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "langevin_rates_out"
FORMATS = ("json", "csv", "both")
REQUIRED = object()


# ----------------------------------------------------------------- params


def _as_float(key, v):
    if isinstance(v, bool):
        raise UsageError(f"{key}: expected a number, got {v!r}", key)
    try:
        return float(v)
    except (TypeError, ValueError):
        raise UsageError(f"{key}: expected a number, got {v!r}", key) from None


def _as_int(key, v):
    if isinstance(v, bool):
        raise UsageError(f"{key}: expected an integer, got {v!r}", key)
    try:
        f = float(v)
    except (TypeError, ValueError):
        raise UsageError(f"{key}: expected an integer, got {v!r}", key) from None
    if not f.is_integer():
        raise UsageError(f"{key}: expected an integer, got {v!r}", key)
    return int(f)


def _as_bool(key, v):
    if isinstance(v, bool):
        return v
    if isinstance(v, str) and v.lower() in ("true", "false"):
        return v.lower() == "true"
    raise UsageError(f"{key}: expected true/false, got {v!r}", key)


def _as_str(key, v):
    if not isinstance(v, str):
        raise UsageError(f"{key}: expected a string, got {v!r}", key)
    return v


def _as_json(key, v):
    if isinstance(v, str):
        s = v.strip()
        if s[:1] in "[{":
            try:
                return json.loads(s)
            except json.JSONDecodeError as exc:
                raise UsageError(f"{key}: invalid JSON ({exc})", key) from None
    return v


def _as_floats(key, v):
    v = _as_json(key, v)
    if isinstance(v, str):
        v = [p for p in v.split(",") if p.strip()]
    if not isinstance(v, (list, tuple)):
        raise UsageError(f"{key}: expected a list of numbers", key)
    return [_as_float(key, x) for x in v]


def _as_strs(key, v):
    v = _as_json(key, v)
    if isinstance(v, str):
        v = [p.strip() for p in v.split(",") if p.strip()]
    if not isinstance(v, (list, tuple)) or not all(isinstance(x, str) for x in v):
        raise UsageError(f"{key}: expected a list of names", key)
    return list(v)


@dataclass(frozen=True)
class Param:
    kind: Callable[[str, Any], Any]
    default: Any = None
    help: str = ""


_P = Param
PARAMS: dict[str, dict[str, Param]] = {
    "rate": {
        "m": _P(_as_float, None, "Poincare constant (taken from --potential when omitted)"),
        "gamma": _P(_as_float, REQUIRED, "friction"),
        "R": _P(_as_float, None, "potential constant R (selected from --potential when omitted, else 0)"),
        "c0": _P(_as_float, 1.0, "universal constant c0"),
        "potential": _P(_as_json, None, "potential document (JSON or path)"),
    },
    "sweep-gamma": {
        "m": _P(_as_float, REQUIRED, "Poincare constant"),
        "R": _P(_as_float, 0.0, "potential constant R"),
        "c0": _P(_as_float, 1.0, "universal constant c0"),
        "gamma_min": _P(_as_float, 1e-3, "smallest friction of the log grid"),
        "gamma_max": _P(_as_float, 1e3, "largest friction of the log grid"),
        "n": _P(_as_int, 61, "number of log-grid points"),
        "gammas": _P(_as_floats, None, "explicit friction grid (overrides the log grid)"),
    },
    "dms": {
        "gamma": _P(_as_float, REQUIRED, "friction"),
        "m": _P(_as_float, REQUIRED, "Poincare constant"),
        "K": _P(_as_float, None, "Hessian lower bound, giving r_ham = sqrt(max(K, 2))"),
        "r_ham": _P(_as_float, None, "explicit r_ham (exclusive with K)"),
        "epsilon": _P(_as_float, None, "also evaluate the rate at this epsilon"),
    },
    "spectrum": {
        "m": _P(_as_float, REQUIRED, "quadratic stiffness"),
        "gamma": _P(_as_float, REQUIRED, "friction"),
        "nmax": _P(_as_int, 3, "largest Hermite index"),
    },
    "galerkin": {
        "m": _P(_as_float, REQUIRED, "quadratic stiffness"),
        "gamma": _P(_as_float, REQUIRED, "friction"),
        "N": _P(_as_int, 40, "truncation order"),
        "dps": _P(_as_int, None, "extended precision digits for small blocks"),
        "max_degree": _P(_as_int, 4, "report eigenvalues with i + j up to this degree"),
    },
    "poincare": {
        "potential": _P(_as_json, REQUIRED, "1-D potential document (JSON or path)"),
        "x_min": _P(_as_float, None, "left end (default -8/sqrt(m) for quadratics)"),
        "x_max": _P(_as_float, None, "right end (default 8/sqrt(m) for quadratics)"),
        "n_points": _P(_as_int, 2048, "grid points"),
        "tol": _P(_as_float, 1e-13, "eigenvalue tolerance"),
    },
    "simulate": {
        "potential": _P(_as_json, REQUIRED, "potential document (JSON or path)"),
        "scheme": _P(_as_str, "Splitting", "EulerMaruyama or Splitting"),
        "dt": _P(_as_float, REQUIRED, "time step"),
        "t_final": _P(_as_float, REQUIRED, "final time"),
        "gamma": _P(_as_float, 1.0, "friction"),
        "n_traj": _P(_as_int, REQUIRED, "number of trajectories"),
        "seed": _P(_as_int, 0, "ensemble seed"),
        "init": _P(_as_json, REQUIRED, '{"type": "PointMass", "x0": [..], "v0": [..]} or {"type": "Gaussian", "mean": [..], "cov": [[..]]}'),
        "observables": _P(_as_strs, ["x"], "observable names"),
        "dt_out": _P(_as_float, None, "output interval (multiple of dt)"),
        "workers": _P(_as_int, 1, "worker threads"),
        "overdamped": _P(_as_bool, False, "simulate the overdamped dynamics"),
        "fit": _P(_as_bool, False, "fit a decay rate to one observable"),
        "fit_mode": _P(_as_str, "TailLinear", "TailLinear or Envelope"),
        "fit_window": _P(_as_floats, None, "fit window t_start,t_end"),
        "fit_observable": _P(_as_str, None, "observable to fit (default: first)"),
        "fit_abs": _P(_as_bool, False, "fit the absolute value of the observable mean"),
    },
    "fit": {
        "input": _P(_as_str, REQUIRED, "CSV file with a header row"),
        "column": _P(_as_str, REQUIRED, "value column"),
        "time_column": _P(_as_str, "t", "time column"),
        "mode": _P(_as_str, "TailLinear", "TailLinear or Envelope"),
        "window": _P(_as_floats, None, "fit window t_start,t_end"),
        "abs": _P(_as_bool, False, "fit absolute values"),
    },
    "report": {
        "potential": _P(_as_json, None, 'potential document without m (default {"kind": "quadratic"})'),
        "grid": _P(_as_json, None, "list of [m, gamma] pairs"),
        "m": _P(_as_floats, None, "m values (crossed with gamma)"),
        "gamma": _P(_as_floats, None, "gamma values (crossed with m)"),
        "c0": _P(_as_float, 1.0, "universal constant c0"),
    },
}
COMMANDS = tuple(PARAMS)
_BOOL_KINDS = (_as_bool,)


@dataclass(frozen=True)
class RunConfig:
    command: str
    params: dict = field(default_factory=dict)
    output_dir: str = DEFAULT_OUTPUT_DIR
    format: str = "json"


def _resolve(command: str, params: dict) -> dict:
    table = PARAMS[command]
    for key in params:
        if key not in table:
            raise UsageError(f"unknown parameter {key!r} for command {command!r}", key)
    out = {}
    for key, p in table.items():
        if key in params and params[key] is not None:
            out[key] = p.kind(key, params[key])
        elif p.default is REQUIRED:
            raise UsageError(f"missing required parameter {key!r}", key)
        else:
            out[key] = p.default
    return out


# ----------------------------------------------------------------- results


@dataclass
class Result:
    record: dict
    header: list[str] | None = None
    rows: list[list] | None = None
    extra: dict[str, dict] = field(default_factory=dict)  # suffix -> JSON record


def _potential(doc, m=None):
    if isinstance(doc, dict) and m is not None:
        doc = {**doc, "m": m}
    try:
        return load_potential(doc)
    except (OSError, json.JSONDecodeError, TypeError) as exc:
        raise UsageError(f"potential: {exc}", "potential") from None


def _cmd_rate(p):
    m, R = p["m"], p["R"]
    regime = None
    if p["potential"] is not None:
        spec = _potential(p["potential"], m)
        if m is None:
            if spec.poincare_m is None:
                raise MissingMetadataError("poincare_m")
            m = spec.poincare_m
        if R is None:
            regime = select_R(spec)
            R = regime.value
    if m is None:
        raise UsageError("missing required parameter 'm'", "m")
    res = main_rate(RateInputs(m=m, gamma=p["gamma"], R=0.0 if R is None else R, c0=p["c0"]), regime)
    rec = res.to_dict()
    header = ["lambda", "m", "gamma", "R", "c0", "regime"]
    return Result(rec, header, [[rec[k] for k in header]])


def _cmd_sweep(p):
    if p["gammas"] is not None:
        grid = p["gammas"]
    else:
        if p["n"] < 2 or not 0 < p["gamma_min"] < p["gamma_max"]:
            raise UsageError("log grid needs n >= 2 and 0 < gamma_min < gamma_max", "n")
        grid = np.geomspace(p["gamma_min"], p["gamma_max"], p["n"]).tolist()
    rows = gamma_sweep(p["m"], p["R"], p["c0"], grid)
    rec = {
        "m": p["m"], "R": p["R"], "c0": p["c0"],
        "gamma_opt": optimal_gamma_general(p["m"], p["R"]),
        "rows": [{"gamma": g, "lambda": lam} for g, lam in rows],
    }
    return Result(rec, ["gamma", "lambda"], [list(r) for r in rows])


def _cmd_dms(p):
    if p["K"] is not None and p["r_ham"] is not None:
        raise UsageError("give at most one of K and r_ham", "r_ham")
    r_ham = p["r_ham"] if p["r_ham"] is not None else r_ham_bound(0.0 if p["K"] is None else p["K"])
    opt = dms_optimize(p["gamma"], p["m"], r_ham)
    rec = {
        "gamma": p["gamma"], "m": p["m"], "r_ham": r_ham,
        "epsilon_star": opt.epsilon_star, "lambda_star": opt.lambda_star,
        "at_boundary": opt.at_boundary, "evaluations": opt.evaluations,
        "prefactor": opt.prefactor,
    }
    if p["epsilon"] is not None:
        rec["epsilon"] = p["epsilon"]
        rec["lambda_at_epsilon"] = dms_rate(DmsInputs(p["gamma"], p["m"], r_ham, p["epsilon"]))
    header = list(rec)
    return Result(rec, header, [[rec[k] for k in header]])


def _eig_rows(rows):
    return [{"i": i, "j": j, "re": re, "im": im} for i, j, re, im in rows]


def _cmd_spectrum(p):
    res = quadratic_spectrum(p["m"], p["gamma"], p["nmax"])
    rows = res.rows()
    rec = {"m": p["m"], "gamma": p["gamma"], "nmax": p["nmax"], "truncation": "exact", "gap": res.gap,
           "eigenvalues": _eig_rows(rows)}
    return Result(rec, ["i", "j", "re", "im"], [list(r) for r in rows])


def _cmd_galerkin(p):
    gen = build_generator_hermite(p["m"], p["gamma"], p["N"])
    res = matrix_gap(gen, dps=p["dps"])
    exact = quadratic_spectrum(p["m"], p["gamma"], max(1, p["max_degree"]))
    lookup = {(i, j): complex(re, im) for i, j, re, im in exact.rows()}
    rows = []
    for i, j, re, im in res.rows():
        if i < 0 or i + j > p["max_degree"]:
            continue
        z = lookup[(i, j)]
        rows.append([i, j, re, im, z.real, z.imag, abs(complex(re, im) - z)])
    rows.sort(key=lambda r: (r[0] + r[1], r[0]))
    gap_exact = quadratic_gap(p["m"], p["gamma"])
    header = ["i", "j", "re", "im", "exact_re", "exact_im", "abs_error"]
    rec = {
        "m": p["m"], "gamma": p["gamma"], "N": p["N"], "truncation": res.truncation, "dps": p["dps"],
        "gap": res.gap, "exact_gap": gap_exact, "gap_error": abs(res.gap - gap_exact),
        "eigenvalues": [dict(zip(header, r)) for r in rows],
    }
    return Result(rec, header, rows)


def _cmd_poincare(p):
    spec = _potential(p["potential"])
    x_min, x_max = p["x_min"], p["x_max"]
    if x_min is None or x_max is None:
        if not (spec.is_quadratic and spec.poincare_m):
            raise UsageError("x_min and x_max are required for non-quadratic potentials", "x_min")
        half = 8.0 / math.sqrt(spec.poincare_m)
        x_min = -half if x_min is None else x_min
        x_max = half if x_max is None else x_max
    est = poincare_fd(spec, x_min, x_max, p["n_points"], tol=p["tol"])
    rec = {"potential": spec.name, **est.to_dict()}
    header = ["m_hat", "x_min", "x_max", "n_points", "tolerance", "eigen_iterations", "residual"]
    row = [est.m_hat, est.grid[0], est.grid[1], est.grid[2], est.tolerance, est.eigen_iterations, est.residual]
    return Result(rec, header, [row])


def _init(doc):
    if not isinstance(doc, dict) or "type" not in doc:
        raise UsageError("init must be an object with a 'type'", "init")
    kind = doc["type"]
    keys = {"PointMass": {"type", "x0", "v0"}, "Gaussian": {"type", "mean", "cov"}}
    if kind not in keys:
        raise UsageError(f"init type must be PointMass or Gaussian, got {kind!r}", "init")
    unknown = set(doc) - keys[kind]
    if unknown:
        raise UsageError(f"unknown init keys {sorted(unknown)}", "init")
    try:
        if kind == "PointMass":
            return PointMass(doc["x0"], doc.get("v0"))
        return Gaussian(doc["mean"], doc["cov"])
    except KeyError as exc:
        raise UsageError(f"init is missing {exc}", "init") from None


def _fit_mode(key, value):
    try:
        return FitMode(value)
    except ValueError:
        raise UsageError(f"{key} must be TailLinear or Envelope, got {value!r}", key) from None


def _window(key, w):
    if w is None:
        return None
    if len(w) != 2:
        raise UsageError(f"{key} must be two numbers", key)
    return tuple(w)


def _cmd_simulate(p):
    spec = _potential(p["potential"])
    try:
        cfg = IntegratorConfig(p["scheme"], p["dt"], p["t_final"], p["gamma"], p["seed"])
    except ValueError as exc:
        if isinstance(exc, InvalidParameterError):
            raise
        raise UsageError(f"scheme must be EulerMaruyama or Splitting, got {p['scheme']!r}", "scheme") from None
    tab = simulate_ensemble(
        spec, cfg, p["n_traj"], _init(p["init"]), p["observables"],
        dt_out=p["dt_out"], workers=p["workers"], overdamped=p["overdamped"],
    )
    header = tab.header()
    rows = tab.rows()
    rec = {
        "potential": spec.name, "n_traj": tab.n_traj, "diverged": list(tab.diverged),
        "observables": list(tab.names), "columns": header, "rows": rows,
    }
    res = Result(rec, header, rows)
    if p["fit"]:
        name = p["fit_observable"] or tab.names[0]
        if name not in tab.names:
            raise UsageError(f"fit_observable {name!r} was not simulated", "fit_observable")
        values = tab.column(name)[0]
        if p["fit_abs"]:
            values = np.abs(values)
        fit = fit_decay(tab.times, values, _fit_mode("fit_mode", p["fit_mode"]), _window("fit_window", p["fit_window"]))
        rec["fit"] = {"observable": name, **fit.to_dict()}
        res.extra["fit"] = rec["fit"]
    return res


def _cmd_fit(p):
    path = Path(p["input"])
    try:
        with path.open(newline="") as fh:
            reader = csv.DictReader(fh)
            data = list(reader)
            fields = reader.fieldnames or []
    except OSError as exc:
        raise UsageError(f"input: {exc}", "input") from None
    for key in ("time_column", "column"):
        if p[key] not in fields:
            raise UsageError(f"{key}: no column {p[key]!r} in {path.name}", key)
    t = np.array([float(r[p["time_column"]]) for r in data])
    y = np.array([float(r[p["column"]]) for r in data])
    if p["abs"]:
        y = np.abs(y)
    fit = fit_decay(t, y, _fit_mode("mode", p["mode"]), _window("window", p["window"]))
    rec = fit.to_dict()
    header = ["rate", "log_intercept", "t_start", "t_end", "residual_rms", "rate_stderr", "mode", "n_points"]
    row = [fit.rate, fit.log_intercept, fit.window[0], fit.window[1], fit.residual_rms,
           fit.rate_stderr, fit.mode.value, fit.n_points]
    return Result(rec, header, [row])


# ----------------------------------------------------------------- report


@dataclass(frozen=True)
class ReportBundle:
    """Rate table over an (m, gamma) grid; ``lambda_exact`` only for quadratics."""

    columns: tuple[str, ...]
    rows: tuple[tuple, ...]
    c0: float
    potential: str
    manifest: str | None = None

    def to_dict(self) -> dict:
        return {
            "c0": self.c0,
            "potential": self.potential,
            "columns": list(self.columns),
            "rows": [list(r) for r in self.rows],
            "manifest": self.manifest,
        }


def _error_token(exc: Exception) -> str:
    return f"ERROR:{type(exc).__name__}"


def report(grid: Sequence[Sequence[float]], potential=None, c0: float = 1.0) -> ReportBundle:
    """One row ``(m, gamma, R, c0, lambda_main, lambda_dms[, lambda_exact])`` per grid point.

    ``potential`` is a potential document without ``m`` (default: isotropic
    quadratic); each row supplies its own Poincare constant. R comes from
    :func:`select_R` and ``r_ham`` from the Hessian lower bound. A failing
    cell holds an ``ERROR:<type>`` token instead of a number.
    """
    grid = [tuple(g) for g in grid]
    if not grid:
        raise UsageError("report grid is empty", "grid")
    if any(len(g) != 2 for g in grid):
        raise UsageError("grid entries must be [m, gamma] pairs", "grid")
    doc = {"kind": "quadratic"} if potential is None else dict(potential)
    if "m" in doc:
        raise UsageError("the report potential takes m from the grid", "potential")
    quadratic = doc.get("kind") == "quadratic"
    columns = ["m", "gamma", "R", "c0", "lambda_main", "lambda_dms"]
    if quadratic:
        columns.append("lambda_exact")
    name = None
    rows = []
    for m, gamma in grid:
        row: list[Any] = [float(m), float(gamma)]
        try:
            spec = _potential(doc, float(m))
            name = name or spec.name.split("(")[0]
            R = select_R(spec).value
        except LangevinRatesError as exc:
            spec, R = None, _error_token(exc)
        row += [R, float(c0)]
        try:
            if isinstance(R, str):
                raise MissingMetadataError("R")
            row.append(main_rate(RateInputs(m, gamma, R, c0)).lam)
        except LangevinRatesError as exc:
            row.append(_error_token(exc) if not isinstance(R, str) else R)
        try:
            K = spec.hessian_lower_K if spec is not None else None
            if K is None:
                raise MissingMetadataError("hessian_lower_K")
            row.append(dms_optimize(gamma, m, r_ham_bound(K)).lambda_star)
        except LangevinRatesError as exc:
            row.append(_error_token(exc))
        if quadratic:
            try:
                row.append(quadratic_gap(m, gamma))
            except LangevinRatesError as exc:
                row.append(_error_token(exc))
        rows.append(tuple(row))
    return ReportBundle(tuple(columns), tuple(rows), float(c0), name or str(doc.get("kind")))


def _cmd_report(p):
    if p["grid"] is not None and (p["m"] is not None or p["gamma"] is not None):
        raise UsageError("give either grid or m/gamma lists", "grid")
    if p["grid"] is not None:
        grid = p["grid"]
        if not isinstance(grid, list):
            raise UsageError("grid must be a list of [m, gamma] pairs", "grid")
        grid = [[_as_float("grid", x) for x in pair] if isinstance(pair, list) else pair for pair in grid]
    elif p["m"] is not None and p["gamma"] is not None:
        grid = [[m, g] for m in p["m"] for g in p["gamma"]]
    else:
        raise UsageError("report needs grid, or both m and gamma", "grid")
    bundle = report(grid, p["potential"], p["c0"])
    rec = bundle.to_dict()
    return Result(rec, list(bundle.columns), [list(r) for r in bundle.rows])


HANDLERS = {
    "rate": _cmd_rate,
    "sweep-gamma": _cmd_sweep,
    "dms": _cmd_dms,
    "spectrum": _cmd_spectrum,
    "galerkin": _cmd_galerkin,
    "poincare": _cmd_poincare,
    "simulate": _cmd_simulate,
    "fit": _cmd_fit,
    "report": _cmd_report,
}
SCHEMAS = {
    "rate": "rate_result",
    "sweep-gamma": "sweep_gamma",
    "dms": "dms_result",
    "spectrum": "spectrum",
    "galerkin": "galerkin",
    "poincare": "poincare",
    "simulate": "simulate",
    "fit": "decay_fit",
    "report": "report",
}


# ----------------------------------------------------------------- running


def _exit_code(exc: Exception) -> int:
    if isinstance(exc, (NumericalFailureError, DivergenceError, FitFailureError)):
        return 3
    if isinstance(exc, LangevinRatesError):
        return 2
    return 1


def _error_record(command: str, exc: Exception) -> dict:
    err = {"type": type(exc).__name__, "message": str(exc), "key": getattr(exc, "key", None)}
    for attr in ("field", "step", "iterations", "residual"):
        if getattr(exc, attr, None) is not None:
            err[attr] = getattr(exc, attr)
    if getattr(exc, "trajectories", None):
        err["trajectories"] = list(exc.trajectories)
    return {"status": "error", "command": command, "error": err}


def run(config: RunConfig, stdout=None, stderr=None) -> int:
    """Resolve, execute and persist one run; returns the exit status."""
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    command = config.command
    try:
        if command not in PARAMS:
            raise UsageError(f"unknown command {command!r}", "command")
        if config.format not in FORMATS:
            raise UsageError(f"format must be one of {FORMATS}, got {config.format!r}", "format")
        params = _resolve(command, dict(config.params))
    except LangevinRatesError as exc:
        stderr.write(dumps(_error_record(command, exc)))
        return _exit_code(exc)

    resolved = {"command": command, "params": params, "format": config.format}
    stem = f"{command}-{config_hash(resolved)}"
    out_dir = Path(config.output_dir)
    manifest = {
        "toolkit": "langevin_rates",
        "version": __version__,
        "command": command,
        "params": to_jsonable(params),
        "format": config.format,
        "artifacts": [],
        "status": "ok",
        "error": None,
    }
    try:
        result = HANDLERS[command](params)
    except LangevinRatesError as exc:
        err = _error_record(command, exc)
        manifest.update(status="error", error=err["error"])
        atomic_write(out_dir / f"{stem}.manifest.json", dumps(manifest))
        stderr.write(dumps(err))
        return _exit_code(exc)

    if isinstance(result.record, dict):
        if command == "report":
            result.record["manifest"] = f"{stem}.manifest.json"
    files: dict[str, str] = {}
    if config.format in ("json", "both"):
        files[f"{stem}.json"] = dumps(result.record)
    if config.format in ("csv", "both") and result.header is not None:
        files[f"{stem}.csv"] = csv_text(result.header, result.rows)
    for suffix, rec in result.extra.items():
        files[f"{stem}.{suffix}.json"] = dumps(rec)
    for name, text in files.items():
        atomic_write(out_dir / name, text)
    manifest["artifacts"] = sorted(files)
    atomic_write(out_dir / f"{stem}.manifest.json", dumps(manifest))
    stdout.write(dumps(result.record))
    return 0


# ------------------------------------------------------------------ argparse


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message, None)


def _flag(key: str) -> str:
    return "--" + key.replace("_", "-")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="langevin-rates", allow_abbrev=False, description="Convergence rates of underdamped Langevin dynamics.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    for command, table in PARAMS.items():
        sp = sub.add_parser(command, allow_abbrev=False)
        sp.add_argument("--config", help="JSON run configuration")
        sp.add_argument("--output-dir", dest="_output_dir", help=f"output directory (env {OUTPUT_DIR_ENV})")
        sp.add_argument("--format", dest="_format", choices=FORMATS, help="artifact format (default json)")
        for key, p in table.items():
            if p.kind in _BOOL_KINDS:
                sp.add_argument(_flag(key), dest=key, action="store_const", const=True,
                                default=argparse.SUPPRESS, help=p.help)
            else:
                sp.add_argument(_flag(key), dest=key, default=argparse.SUPPRESS, help=p.help)
    return parser


def _load_config_file(path: str) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}", "config") from None
    if not isinstance(doc, dict):
        raise UsageError("config file must hold a JSON object", "config")
    unknown = set(doc) - {"command", "params", "output_dir", "format"}
    if unknown:
        raise UsageError(f"unknown config keys {sorted(unknown)}", sorted(unknown)[0])
    if not isinstance(doc.get("params", {}), dict):
        raise UsageError("config 'params' must be an object", "params")
    return doc


def config_from_args(argv: Sequence[str] | None = None) -> RunConfig:
    args = vars(build_parser().parse_args(argv))
    command = args.pop("command")
    if command is None:
        raise UsageError("a subcommand is required", "command")
    file_doc = _load_config_file(args.pop("config")) if args.get("config") else {}
    args.pop("config", None)
    if file_doc.get("command", command) != command:
        raise UsageError(f"config is for {file_doc['command']!r}, not {command!r}", "command")
    out_flag, fmt_flag = args.pop("_output_dir", None), args.pop("_format", None)
    params = {**file_doc.get("params", {}), **args}
    output_dir = out_flag or file_doc.get("output_dir") or os.environ.get(OUTPUT_DIR_ENV) or DEFAULT_OUTPUT_DIR
    fmt = fmt_flag or file_doc.get("format") or "json"
    return RunConfig(command=command, params=params, output_dir=str(output_dir), format=fmt)


def main(argv: Sequence[str] | None = None) -> int:
    try:
        config = config_from_args(argv)
    except UsageError as exc:
        sys.stderr.write(dumps(_error_record("", exc)))
        return 2
    return run(config)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
