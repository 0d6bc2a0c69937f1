"""Command-line front end.

    guplab uncertainty --f "1+beta*p^2" --beta 0.01 --sweep a 1e-3 1e3 61 log --out gup.csv
    guplab oscillator --beta 1e-3 --levels 10
    guplab egup --q 1.1 --mode floor
    guplab check

Settings may also come from a ``key = value`` file given with ``--config``;
flags given on the command line win.  Tables go to ``--out`` (or standard
output), one summary line per sweep point goes to standard output (or
standard error when the table itself is on standard output).

Exit status: 0 success, 1 failed ``check``, 2 invalid input, 3 numerical
failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import egup as eg
from . import oscillator as osc
from .checks import run_checks
from .deform import DeformationError, QuadratureError, parse_deformation, quadratic
from .expr import ParseError, UnboundParameterError
from .grid import MomentumGrid, PhysicalUnits, inner_product, uncertainty
from .operators import DomainError, check_gup, momentum_action, position_action
from .states import (
    GridError,
    MLParams,
    SqueezedParams,
    ml_grid,
    ml_state,
    squeezed_grid,
    squeezed_state,
    windowed_ml_state,
)
from .wigner import KernelError, default_x_grid, marginals, phase_space_expectation, wigner_function, write_wigner_matrix

__all__ = ["RunConfig", "ConfigError", "parse_config", "sweep_values", "run", "main"]

COMMANDS = ("uncertainty", "mlstate", "oscillator", "wigner", "egup", "check")
EGUP_MODES = ("floor", "spectrum", "squeezed", "commutator")
WIGNER_STATES = ("squeezed", "fock", "ml")
DEFAULT_F = "1+beta*p^2"

EXIT_OK, EXIT_FAILED, EXIT_INVALID, EXIT_NUMERICAL = 0, 1, 2, 3


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key or line."""


# key -> parser of the whitespace-separated value tokens
def _float(tokens):
    (t,) = tokens
    return float(t)


def _int(tokens):
    (t,) = tokens
    v = int(t)
    return v


def _str(tokens):
    return " ".join(tokens)


def _bool(tokens):
    (t,) = tokens
    low = t.lower()
    if low in ("true", "yes", "1"):
        return True
    if low in ("false", "no", "0"):
        return False
    raise ValueError(t)


def _grid(tokens):
    lo, hi, n = tokens
    return (float(lo), float(hi), int(n))


def _sweep(tokens):
    var, start, stop, count, spacing = tokens
    return (var, float(start), float(stop), int(count), spacing)


KEYS = {
    "command": _str,
    "f": _str,
    "beta": _float,
    "alpha": _float,
    "q": _float,
    "L": _float,
    "hbar": _float,
    "mass": _float,
    "omega": _float,
    "a": _float,
    "x0": _float,
    "p0": _float,
    "xi": _float,
    "n": _int,
    "grid": _grid,
    "sweep": _sweep,
    "levels": _int,
    "trunc": _int,
    "out": _str,
    "format": _str,
    "mode": _str,
    "matrix": _bool,
}

PHYSICAL = ("beta", "alpha", "q", "L", "hbar", "mass", "omega", "a", "x0", "p0", "xi")


@dataclass(frozen=True)
class Sweep:
    var: str
    start: float
    stop: float
    count: int
    spacing: str = "lin"


@dataclass(frozen=True)
class RunConfig:
    """Validated settings for one invocation."""

    command: str
    deformation: Optional[str] = None
    params: Dict[str, float] = field(default_factory=dict)
    grid: Optional[Tuple[float, float, int]] = None
    sweep: Optional[Sweep] = None
    levels: int = 10
    trunc: Optional[int] = None
    n: int = 0
    out: Optional[str] = None
    format: str = "csv"
    mode: Optional[str] = None
    matrix: bool = False

    @property
    def units(self) -> PhysicalUnits:
        return PhysicalUnits(self.params["hbar"], self.params["mass"], self.params["omega"])

    def momentum_grid(self) -> Optional[MomentumGrid]:
        return None if self.grid is None else MomentumGrid(*self.grid)


DEFAULT_PARAMS = {
    "beta": 0.0, "alpha": 0.0, "q": 1.1, "L": 1.0,
    "hbar": 1.0, "mass": 1.0, "omega": 1.0,
    "a": 1.0, "x0": 0.0, "p0": 0.0, "xi": 0.0,
}


def read_config_file(path: str) -> Dict[str, object]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from None
    values: Dict[str, object] = {}
    seen: Dict[str, int] = {}
    for number, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{number}: expected 'key = value'")
        key, _, text = (s.strip() for s in line.partition("="))
        if key not in KEYS:
            raise ConfigError(f"{path}:{number}: unknown key '{key}'")
        if key in seen:
            raise ConfigError(f"{path}:{number}: duplicate key '{key}' (first set on line {seen[key]})")
        try:
            values[key] = KEYS[key](text.split())
        except ValueError:
            raise ConfigError(f"{path}:{number}: bad value for '{key}': {text!r}") from None
        seen[key] = number
    return values


class _Parser(argparse.ArgumentParser):
    """Raises instead of exiting so callers see one error type."""

    def error(self, message):
        raise ConfigError(message)


def _build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="guplab", description="Deformed-commutator quantum mechanics toolkit.")
    ap.add_argument("command", nargs="?", choices=COMMANDS)
    ap.add_argument("--f", dest="f", metavar="EXPR", help="deformation function of p, e.g. '1+beta*p^2'")
    for name in PHYSICAL:
        ap.add_argument(f"--{name}", type=float, metavar="REAL")
    ap.add_argument("--n", type=int, metavar="INT", help="number state for 'wigner --mode fock'")
    ap.add_argument("--grid", nargs=3, metavar=("PMIN", "PMAX", "NPOINTS"))
    ap.add_argument("--sweep", nargs=5, metavar=("VAR", "START", "STOP", "COUNT", "lin|log"))
    ap.add_argument("--levels", type=int, metavar="INT")
    ap.add_argument("--trunc", type=int, metavar="INT")
    ap.add_argument("--out", metavar="PATH")
    ap.add_argument("--format", choices=("csv", "json"))
    ap.add_argument("--config", metavar="PATH")
    ap.add_argument("--mode", metavar="STRING")
    ap.add_argument("--matrix", action="store_true", default=None, help="wigner: gnuplot matrix layout")
    return ap


SWEEP_VARS = {
    "uncertainty": ("a", "beta", "alpha", "x0", "p0"),
    "mlstate": ("xi", "beta"),
    "oscillator": ("beta", "alpha"),
    "wigner": (),
    "egup": ("q", "a"),
    "check": (),
}


def parse_config(argv: Optional[Sequence[str]] = None, config_path: Optional[str] = None) -> RunConfig:
    """Merge defaults, an optional config file and command-line flags.

    Raises
    ------
    ConfigError
        on unknown or duplicate keys, bad values, or inconsistent settings.
    """
    ns = _build_parser().parse_args(list(argv) if argv is not None else None)
    merged: Dict[str, object] = {}
    path = ns.config or config_path
    if path:
        merged.update(read_config_file(path))
    for key in KEYS:
        value = getattr(ns, key, None)
        if value is None:
            continue
        if key in ("grid", "sweep"):
            try:
                value = KEYS[key](value)
            except ValueError:
                raise ConfigError(f"bad value for --{key}: {' '.join(value)}") from None
        merged[key] = value
    return _validate(merged)


def _validate(values: Dict[str, object]) -> RunConfig:
    command = values.get("command")
    if command is None:
        raise ConfigError("no command given")
    if command not in COMMANDS:
        raise ConfigError(f"unknown command '{command}'")
    params = dict(DEFAULT_PARAMS)
    for key in PHYSICAL:
        if key in values:
            v = float(values[key])
            if not math.isfinite(v):
                raise ConfigError(f"{key} must be finite")
            params[key] = v
    try:
        PhysicalUnits(params["hbar"], params["mass"], params["omega"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    sweep = None
    if "sweep" in values:
        var, start, stop, count, spacing = values["sweep"]
        sweep = Sweep(var, start, stop, count, spacing)
        allowed = SWEEP_VARS[command]
        if var not in allowed:
            raise ConfigError(f"cannot sweep '{var}' for {command}; choose from {', '.join(allowed) or 'nothing'}")
        sweep_values(sweep)  # validates

    grid = values.get("grid")
    if grid is not None:
        lo, hi, n = grid
        if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi and n >= 3):
            raise ConfigError("grid needs finite pmin < pmax and at least 3 points")

    fmt = values.get("format", "csv")
    if fmt not in ("csv", "json"):
        raise ConfigError(f"format must be csv or json, got '{fmt}'")

    mode = values.get("mode")
    if command == "egup":
        mode = mode or "floor"
        if mode not in EGUP_MODES:
            raise ConfigError(f"egup mode must be one of {', '.join(EGUP_MODES)}")
    elif command == "wigner":
        mode = mode or "squeezed"
        if mode not in WIGNER_STATES:
            raise ConfigError(f"wigner mode must be one of {', '.join(WIGNER_STATES)}")
    elif mode is not None:
        raise ConfigError(f"--mode is not used by {command}")
    if command == "mlstate" and values.get("f") not in (None, DEFAULT_F):
        raise ConfigError(f"mlstate supports only f = {DEFAULT_F}")

    levels = int(values.get("levels", 10))
    if levels < 1:
        raise ConfigError("levels must be at least 1")
    trunc = values.get("trunc")
    if trunc is not None and trunc < 2:
        raise ConfigError("trunc must be at least 2")
    n = int(values.get("n", 0))
    if n < 0:
        raise ConfigError("n must be nonnegative")
    return RunConfig(
        command=command,
        deformation=values.get("f"),
        params=params,
        grid=grid,
        sweep=sweep,
        levels=levels,
        trunc=trunc,
        n=n,
        out=values.get("out"),
        format=fmt,
        mode=mode,
        matrix=bool(values.get("matrix", False)),
    )


def sweep_values(sweep: Sweep) -> np.ndarray:
    """Points of a sweep; ``log`` spacing needs positive endpoints.

    Examples
    --------
    >>> sweep_values(Sweep("a", 1, 10, 5, "lin")).tolist()
    [1.0, 3.25, 5.5, 7.75, 10.0]
    """
    if sweep.count < 1:
        raise ConfigError("sweep count must be at least 1")
    if not (math.isfinite(sweep.start) and math.isfinite(sweep.stop)):
        raise ConfigError("sweep endpoints must be finite")
    if sweep.spacing == "lin":
        return np.linspace(sweep.start, sweep.stop, sweep.count)
    if sweep.spacing == "log":
        if sweep.start <= 0 or sweep.stop <= 0:
            raise ConfigError("log sweep needs positive endpoints")
        return np.geomspace(sweep.start, sweep.stop, sweep.count)
    raise ConfigError(f"sweep spacing must be lin or log, got '{sweep.spacing}'")


# ---------------------------------------------------------------- commands

Row = Dict[str, object]


def _deformation(cfg: RunConfig, params: Dict[str, float]):
    text = cfg.deformation or DEFAULT_F
    return parse_deformation(text, {k: params[k] for k in ("beta", "alpha")})


def _uncertainty_point(cfg: RunConfig, params: Dict[str, float]) -> Tuple[List[Row], str]:
    units = PhysicalUnits(params["hbar"], params["mass"], params["omega"])
    spec = _deformation(cfg, params)
    sp = SqueezedParams(params["a"], params["x0"], params["p0"])
    grid = cfg.momentum_grid() or squeezed_grid(sp)
    psi = squeezed_state(sp, grid, units)
    r = check_gup(spec, psi, units)
    row = {"a": sp.a, "dx": r.dx, "dp": r.dp, "lhs": r.lhs, "rhs": r.rhs, "satisfied": r.satisfied}
    return [row], f"a={sp.a:.6g} dx*dp={r.lhs:.10g} bound={r.rhs:.10g} satisfied={str(r.satisfied).lower()}"


def _mlstate_point(cfg: RunConfig, params: Dict[str, float]) -> Tuple[List[Row], str]:
    units = PhysicalUnits(params["hbar"], params["mass"], params["omega"])
    beta, xi = params["beta"], params["xi"]
    if beta <= 0:
        raise ConfigError("mlstate needs beta > 0")
    spec = quadratic(beta)
    mp = MLParams(xi, beta)
    grid = cfg.momentum_grid() or ml_grid(beta, xi, units)
    psi = ml_state(mp, grid, units)
    X = position_action(spec, units, "sandwich")
    mean_x = inner_product(psi, X(psi)).real
    dx = uncertainty(psi, X, square="norm")
    dp = uncertainty(psi, momentum_action(units), square="norm")
    mean_f = inner_product(psi, psi.multiply(spec.f(psi.p))).real
    floor = units.hbar * math.sqrt(beta)
    row = {
        "xi": xi, "beta": beta, "mean_x": mean_x, "dx": dx, "dp": dp,
        "lhs": dx * dp, "rhs": 0.5 * units.hbar * mean_f, "dx_min": floor,
    }
    return [row], f"xi={xi:.6g} beta={beta:.6g} dx={dx:.10g} hbar*sqrt(beta)={floor:.10g}"


def _oscillator_point(cfg: RunConfig, params: Dict[str, float]) -> Tuple[List[Row], str]:
    units = PhysicalUnits(params["hbar"], params["mass"], params["omega"])
    spec = osc.OscillatorSpec(units, params["beta"], cfg.trunc or 200, _deformation(cfg, params))
    if cfg.levels > spec.dim - osc.GUARD_BAND:
        raise ConfigError(f"levels must not exceed trunc + 1 - {osc.GUARD_BAND}")
    E = osc.spectrum(osc.build_H_gup(spec), cfg.levels)
    rows = []
    for n, e in enumerate(E):
        e0 = units.hbar * units.omega * (n + 0.5)
        rows.append({
            "n": n, "E_n": float(e), "E0_n": e0,
            "deltaE_paper": osc.delta_E_perturbative(spec, n), "deltaE_numeric": float(e) - e0,
        })
    return rows, f"beta={spec.beta:.6g} E_0={E[0]:.12g} E_{len(E) - 1}={E[-1]:.12g}"


def _egup_point(cfg: RunConfig, params: Dict[str, float]) -> Tuple[List[Row], str]:
    units = PhysicalUnits(params["hbar"], params["mass"], params["omega"])
    q = params["q"]
    N = cfg.trunc or 100
    if cfg.mode == "floor":
        d = eg.QDeformation.paper_consistent(q, L=params["L"], N=N, hbar=units.hbar)
        r = eg.egup_min_uncertainty(d)
        floor_x = d.L * math.sqrt((q - 1) / q)
        floor_p = d.K * math.sqrt((q - 1) / q)
        row = {
            "q": q, "N": N, "dx_min": r.dx_min, "dp_min": r.dp_min,
            "floor_x": floor_x, "floor_p": floor_p,
            "dx_min_over_L": r.dx_min / d.L, "dp_min_over_K": r.dp_min / d.K,
        }
        ratio = r.dx_min / floor_x if floor_x > 0 else math.nan
        return [row], f"q={q:.6g} dx_min/L={r.dx_min / d.L:.10g} floor/L={floor_x / d.L:.10g} ratio={ratio:.6g}"
    if cfg.mode == "spectrum":
        d = eg.QDeformation.oscillator_mode(q, units, N=max(N, cfg.levels + 20))
        E = eg.egup_oscillator_spectrum(d, units, cfg.levels)
        rows = []
        for n, e in enumerate(E):
            e0 = units.hbar * units.omega * (n + 0.5)
            rows.append({
                "n": n, "E_n": float(e), "E0_n": e0,
                "delta_paper": 0.5 * d.epsilon * units.hbar * units.omega * n * n,
                "delta_numeric": float(e) - e0, "q": q,
            })
        return rows, f"q={q:.6g} E_0={E[0]:.12g} E_{len(E) - 1}={E[-1]:.12g}"
    if cfg.mode == "squeezed":
        d = eg.QDeformation.oscillator_mode(q, units, N=N)
        sp = SqueezedParams(params["a"], params["x0"], params["p0"])
        try:
            r = eg.egup_squeezed_uncertainties(d, units, sp, route="fock")
        except ValueError:
            r = eg.egup_squeezed_uncertainties(d, units, sp, route="grid")
        row = {"a": sp.a, "q": q, "dX": r.dX, "dP": r.dP, "route": r.route}
        return [row], f"a={sp.a:.6g} q={q:.6g} dX={r.dX:.10g} dP={r.dP:.10g} ({r.route})"
    # commutator
    d = eg.QDeformation.paper_consistent(q, L=params["L"], N=N, hbar=units.hbar)
    fit = eg.commutator_fit(d)
    c0, ca, cb = fit.closed_form
    row = {
        "q": q, "c0": fit.c0, "alpha": fit.alpha, "beta": fit.beta,
        "c0_exact": c0, "alpha_exact": ca, "beta_exact": cb, "residual": fit.residual,
    }
    return [row], f"q={q:.6g} fit residual={fit.residual:.3e}"


def _wigner(cfg: RunConfig, params: Dict[str, float]):
    units = PhysicalUnits(params["hbar"], params["mass"], params["omega"])
    spec = _deformation(cfg, params)
    if cfg.mode == "squeezed":
        sp = SqueezedParams(params["a"], params["x0"], params["p0"])
        psi = squeezed_state(sp, cfg.momentum_grid() or squeezed_grid(sp), units)
    elif cfg.mode == "fock":
        grid = cfg.momentum_grid() or osc.oscillator_grid(units, cfg.n)
        psi = osc.hermite_eigenstate(units, cfg.n, grid)
    else:
        beta = params["beta"]
        if beta <= 0:
            raise ConfigError("wigner --mode ml needs beta > 0")
        reach = 60.0 / math.sqrt(beta)
        grid = cfg.momentum_grid() or MomentumGrid(-reach, reach, 4097)
        psi = windowed_ml_state(MLParams(params["xi"], beta), grid, 3.0 / math.sqrt(beta), units)
    x_grid = default_x_grid(psi, units, n=257, widths=16.0 if cfg.mode == "ml" else 8.0)
    W = wigner_function(psi, x_grid, units)
    mp, _ = marginals(W)
    density = np.abs(psi.amplitudes) ** 2
    idx = np.searchsorted(psi.grid.points, W.p)
    marg_err = float(np.max(np.abs(mp - density[idx])))
    mean_X = phase_space_expectation(W, lambda x, p: x * spec.f(p))
    summary = f"state={cfg.mode} total={W.total():.12g} <xf(p)>={mean_X:.10g} momentum marginal error={marg_err:.2e}"
    return W, summary


# ---------------------------------------------------------------- output

def _format(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, str):
        return value
    return "%.17g" % float(value)


def _json_value(value):
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, str):
        return value
    v = float(value)
    return v if math.isfinite(v) else None


def render(rows: List[Row], fmt: str) -> str:
    """CSV (header plus 17-digit floats) or a JSON array of row objects."""
    if fmt == "json":
        return json.dumps([{k: _json_value(v) for k, v in r.items()} for r in rows], indent=1) + "\n"
    if not rows:
        return ""
    header = list(rows[0].keys())
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows([_format(r[k]) for k in header] for r in rows)
    return buf.getvalue()


def _threads() -> int:
    raw = os.environ.get("GUPLAB_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"GUPLAB_THREADS must be an integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError("GUPLAB_THREADS must be at least 1")
    return n


def _check_writable(path: str) -> None:
    parent = os.path.dirname(os.path.abspath(path)) or "."
    if os.path.isdir(path) or not os.path.isdir(parent) or not os.access(parent, os.W_OK):
        raise ConfigError(f"output path not writable: {path}")
    if os.path.exists(path) and not os.access(path, os.W_OK):
        raise ConfigError(f"output path not writable: {path}")


_POINTS = {
    "uncertainty": _uncertainty_point,
    "mlstate": _mlstate_point,
    "oscillator": _oscillator_point,
    "egup": _egup_point,
}


def run(cfg: RunConfig, stdout=None) -> int:
    """Execute ``cfg``; returns the exit status.  Errors propagate."""
    stdout = stdout or sys.stdout
    if cfg.out:
        _check_writable(cfg.out)
    chatter = stdout if cfg.out else sys.stderr

    if cfg.command == "check":
        results = run_checks(cfg.units, report=lambda r: print(
            f"{'PASS' if r.passed else 'FAIL'} {r.name}: error {r.error:.3e} (tol {r.tol:.0e})", file=chatter))
        rows = [{"check": r.name, "error": r.error, "tol": r.tol, "passed": r.passed} for r in results]
        _emit(cfg, render(rows, cfg.format), stdout)
        return EXIT_OK if all(r.passed for r in results) else EXIT_FAILED

    if cfg.command == "wigner":
        if cfg.sweep is not None:
            raise ConfigError("wigner does not take --sweep")
        W, summary = _wigner(cfg, cfg.params)
        if cfg.matrix:
            buf = io.StringIO()
            write_wigner_matrix(W, buf)
            text = buf.getvalue()
        else:
            X, P = np.meshgrid(W.x, W.p, indexing="ij")
            rows = [{"x": x, "p": p, "W": w} for x, p, w in zip(X.ravel(), P.ravel(), W.values.ravel())]
            text = render(rows, cfg.format)
        _emit(cfg, text, stdout)
        print(summary, file=chatter)
        return EXIT_OK

    point = _POINTS[cfg.command]
    if cfg.sweep is None:
        settings = [dict(cfg.params)]
    else:
        settings = [dict(cfg.params, **{cfg.sweep.var: float(v)}) for v in sweep_values(cfg.sweep)]
    workers = min(_threads(), len(settings))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda s: point(cfg, s), settings))
    else:
        results = [point(cfg, s) for s in settings]

    rows: List[Row] = []
    prefix = cfg.sweep is not None and len(results[0][0]) > 1
    for s, (point_rows, summary) in zip(settings, results):
        for r in point_rows:
            if prefix and cfg.sweep.var not in r:
                r = {cfg.sweep.var: s[cfg.sweep.var], **r}
            rows.append(r)
        print(summary, file=chatter)
    _emit(cfg, render(rows, cfg.format), stdout)
    return EXIT_OK


def _emit(cfg: RunConfig, text: str, stdout) -> None:
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        stdout.write(text)


NUMERICAL_ERRORS = (
    GridError, DomainError, QuadratureError, KernelError, eg.ConvergenceError,
    FloatingPointError, np.linalg.LinAlgError, ArithmeticError,
)


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        cfg = parse_config(argv)
        return run(cfg)
    except (ConfigError, ParseError, UnboundParameterError, DeformationError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"guplab: error: {msg}", file=sys.stderr)
        return EXIT_INVALID
    except NUMERICAL_ERRORS as exc:
        print(f"guplab: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"guplab: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
