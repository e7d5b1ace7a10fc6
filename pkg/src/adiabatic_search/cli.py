"""Command-line front end.

Subcommands: ``spectrum``, ``tmin``, ``scan``, ``evolve``, ``audit``. Each
writes a table (CSV by default) and optionally a JSON summary; with
``--format json`` a single JSON document holds both. Floats are written with
17 significant digits, so identical configurations give identical bytes.

Options may also come from ``--config FILE`` holding ``key=value`` lines
(keys are long option names); command-line flags override the file.

Exit codes: 0 success, 1 numerical failure, 2 invalid configuration.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from typing import Optional, Sequence

import numpy as np

from .bounds import AUDIT_CAP, audit_theorem
from .dynamics import evolve_reduced, final_fidelity
from .errors import CapExceededError, DomainError, NonConvergenceError
from .model import PathSpec, spectrum_arrays
from .oracle import FULL_CAP, evolve_full
from .scheduler import LinearRamp, ProblemSpec, ScanRow, scan_alpha, synthesize, t_min

log = logging.getLogger("adiabatic_search")

CONSTANT_TIME_LIMIT = 1.0 + math.pi / 2.0
QUENCH_T = 1e-6
SCHEMA_VERSION = 1

EXIT_OK, EXIT_NUMERICAL, EXIT_INVALID = 0, 1, 2


class ConfigError(ValueError):
    pass


# --------------------------------------------------------------------------
# formatting
# --------------------------------------------------------------------------


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.17g}"


def _json_value(value):
    if isinstance(value, dict):
        return {str(k): _json_value(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_value(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_json_value(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


class _Encoder(json.JSONEncoder):
    # the C encoder hard-wires float.__repr__; use the pure-Python path with
    # fixed 17-digit floats instead
    def iterencode(self, o, _one_shot=False):
        return json.encoder._make_iterencode(
            {}, self.default, json.encoder.py_encode_basestring_ascii, self.indent,
            lambda x: f"{x:.17g}", self.key_separator, self.item_separator,
            self.sort_keys, self.skipkeys, _one_shot,
        )(o, 0)


def dumps_json(doc) -> str:
    return json.dumps(_json_value(doc), cls=_Encoder, indent=2, sort_keys=False,
                      allow_nan=False) + "\n"


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def _write(path: Optional[str], text: str, stdout):
    if path is None or path == "-":
        stdout.write(text)
    else:
        with open(path, "w", newline="\n", encoding="utf-8") as fh:
            fh.write(text)


# --------------------------------------------------------------------------
# argument parsing
# --------------------------------------------------------------------------


def _int_list(text):
    return [int(float(v)) for v in str(text).split(",") if v.strip()]


def _float_list(text):
    return [float(v) for v in str(text).split(",") if v.strip()]


def _add_common(p, path_args=True, eps_default=0.01):
    p.add_argument("--out", default=None, help="output file (default: stdout)")
    p.add_argument("--summary", default=None, help="JSON summary file (csv format only)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--eps", type=float, default=eps_default, help="adiabatic accuracy epsilon")
    if path_args:
        p.add_argument("--n", type=lambda v: int(float(v)), required=True, help="database size N")
        p.add_argument("--a", type=float, default=None, help="path parameter A")
        p.add_argument("--alpha", type=float, default=None, help="set A = N**alpha")


def _add_schedule(p):
    p.add_argument("--time-scale", type=float, default=1.0,
                   help="run the saturating schedule this many times slower")
    p.add_argument("--sudden", action="store_true",
                   help=f"sudden quench: s(t) = t/T with T = {QUENCH_T:g}")
    p.add_argument("--grid", type=int, default=64, help="initial schedule grid size")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adiabatic-search",
        description="Generalized adiabatic quantum search: schedules, dynamics and bounds.",
    )
    parser.add_argument("--config", default=None, help="key=value configuration file")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", help="E-, E+, gap and coupling along the path")
    _add_common(p)
    p.add_argument("--samples", type=int, default=101)

    p = sub.add_parser("tmin", help="minimum running time for one (N, A)")
    _add_common(p)

    p = sub.add_parser("scan", help="eps*T_min over an N x alpha grid")
    _add_common(p, path_args=False)
    p.add_argument("--n", type=_int_list, required=True, help="comma-separated N values")
    p.add_argument("--alpha", type=_float_list, required=True, help="comma-separated alphas")
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("evolve", help="P-(t) along a schedule")
    _add_common(p)
    _add_schedule(p)
    p.add_argument("--engine", choices=("reduced", "full"), default="reduced")
    p.add_argument("--shift-ground", action="store_true",
                   help="evolve with H - E-(t) I (full engine)")
    p.add_argument("--mark", type=int, default=0, help="marked index (full engine)")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--fidelity-factor", type=float, default=10.0,
                   help="success when P-(T) >= 1 - c eps^2")

    p = sub.add_parser("audit", help="overlap-sum inequality and oracle-action bound")
    _add_common(p, eps_default=0.05)
    _add_schedule(p)
    p.add_argument("--gauge", choices=("shifted", "lab"), default="shifted")
    return parser


_BOOL_TRUE = {"1", "true", "yes", "on"}
_BOOL_FALSE = {"0", "false", "no", "off", ""}


def read_config(path: str, command: str) -> list:
    """Translate a key=value file into argv tokens."""
    flags = {"sudden", "shift-ground", "verbose"}
    tokens = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value")
            key, value = (part.strip() for part in line.split("=", 1))
            key = key.replace("_", "-")
            if key in ("command", "config"):
                continue
            if key in flags:
                v = value.lower()
                if v in _BOOL_TRUE:
                    tokens.append(f"--{key}")
                elif v not in _BOOL_FALSE:
                    raise ConfigError(f"{path}:{lineno}: {key} expects a boolean")
            else:
                tokens.extend([f"--{key}", value])
    return tokens


def parse_args(argv: Sequence[str]) -> argparse.Namespace:
    parser = build_parser()
    argv = list(argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", default=None)
    known, _ = pre.parse_known_args(argv)
    if known.config:
        cmd_pos = next((i for i, a in enumerate(argv) if a in _COMMANDS), None)
        if cmd_pos is None:
            parser.error("a subcommand is required")
        file_tokens = read_config(known.config, argv[cmd_pos])
        argv = argv[: cmd_pos + 1] + file_tokens + argv[cmd_pos + 1:]
    return parser.parse_args(argv)


_COMMANDS = ("spectrum", "tmin", "scan", "evolve", "audit")


# --------------------------------------------------------------------------
# validation helpers
# --------------------------------------------------------------------------


def _resolve_A(args):
    if args.a is not None and args.alpha is not None:
        raise ConfigError("--a and --alpha are mutually exclusive")
    if args.alpha is not None:
        if args.alpha < 0:
            raise ConfigError("--alpha must be >= 0")
        return float(args.n) ** args.alpha, args.alpha
    return (0.0 if args.a is None else args.a), None


def _path(args) -> PathSpec:
    A, _ = _resolve_A(args)
    return PathSpec.quadratic(args.n, A)


def _problem(args) -> ProblemSpec:
    return ProblemSpec(_path(args), args.eps)


def _schedule(args, problem):
    if args.time_scale <= 0:
        raise ConfigError("--time-scale must be > 0")
    if args.grid < 64:
        raise ConfigError("--grid must be >= 64")
    if args.sudden:
        return LinearRamp(QUENCH_T)
    sched = synthesize(problem, grid_size=args.grid)
    return sched if args.time_scale == 1.0 else sched.scaled(args.time_scale)


def _config_echo(args) -> dict:
    skip = {"out", "summary", "config", "verbose"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------


def cmd_spectrum(args):
    if args.samples < 2:
        raise ConfigError("--samples must be >= 2")
    path = _path(args)
    s = np.linspace(0.0, 1.0, args.samples)
    f, g, _, _, omega, M = spectrum_arrays(path, s)
    if np.any(omega <= 0):
        raise ArithmeticError("gap closes on the path")
    e_minus = 0.5 * (f + g - omega)
    e_plus = 0.5 * (f + g + omega)
    header = ["s", "f", "g", "E_minus", "E_plus", "omega", "M"]
    rows = list(zip(s, f, g, e_minus, e_plus, omega, M))
    summary = {
        "N": path.N, "A": path.A,
        "min_omega": float(omega.min()), "max_E_minus": float(e_minus.max()),
    }
    return header, rows, summary, True


def _scan_output(rows):
    header = ["N", "alpha", "A", "eps_Tmin"]
    table = [(r.N, r.alpha, r.A, r.eps_Tmin) for r in rows]
    failures = [{"N": r.N, "alpha": r.alpha, "A": r.A, "error": r.error}
                for r in rows if r.error]
    for f in failures:
        log.error("row failed: %s", f)
    summary = {
        "row_count": len(rows), "failed": len(failures), "failures": failures,
        "constant_time_limit": CONSTANT_TIME_LIMIT,
    }
    ok = len(failures) < len(rows)
    return header, table, summary, ok


def cmd_tmin(args):
    problem = _problem(args)
    _, alpha = _resolve_A(args)
    if alpha is not None:
        rows = scan_alpha([args.n], [alpha], args.eps)
    else:
        try:
            row = ScanRow(args.n, None, problem.path.A, args.eps * t_min(problem))
        except (ArithmeticError, NonConvergenceError) as exc:
            row = ScanRow(args.n, None, problem.path.A, math.nan,
                          error=f"{type(exc).__name__}: {exc}")
        rows = [row]
    header, table, summary, ok = _scan_output(rows)
    summary["eps_Tmin"] = rows[0].eps_Tmin
    summary["T_min"] = rows[0].eps_Tmin / args.eps
    return header, table, summary, ok


def cmd_scan(args):
    if args.workers < 1:
        raise ConfigError("--workers must be >= 1")
    for N in args.n:
        if N < 2:
            raise ConfigError(f"N must be >= 2, got {N}")
    for a in args.alpha:
        if a < 0:
            raise ConfigError(f"alpha must be >= 0, got {a}")
    ProblemSpec(PathSpec.linear(2), args.eps)
    rows = scan_alpha(args.n, args.alpha, args.eps, workers=args.workers)
    return _scan_output(rows)


def cmd_evolve(args):
    problem = _problem(args)
    if args.samples < 2:
        raise ConfigError("--samples must be >= 2")
    if args.engine == "full":
        if problem.path.N > FULL_CAP:
            raise ConfigError(f"--engine full is capped at N={FULL_CAP}")
        if not 0 <= args.mark < problem.path.N:
            raise ConfigError(f"--mark must lie in [0, {problem.path.N})")
    elif args.shift_ground:
        raise ConfigError("--shift-ground requires --engine full")
    schedule = _schedule(args, problem)
    path = problem.path
    if args.engine == "reduced":
        trace = evolve_reduced(problem, schedule, samples=args.samples)
        t, s, P = trace.t, trace.s, trace.P_minus
        e_minus, omega = trace.E_minus, trace.omega
        fidelity = final_fidelity(trace)
        drift = trace.max_norm_drift
        extra = {}
    else:
        full = evolve_full(problem, schedule, m=args.mark, samples=args.samples,
                           shift_ground=args.shift_ground)
        t, s, P = full.t, full.s, full.P_minus[0]
        f, g, _, _, omega, _ = spectrum_arrays(path, s)
        e_minus = 0.5 * (f + g - omega)
        fidelity = float(P[-1])
        drift = full.max_norm_drift
        extra = {"success_probability": float(full.success_probability()[0]),
                 "mark": args.mark, "shift_ground": args.shift_ground}
    header = ["t", "s", "P_minus", "E_minus", "omega"]
    rows = list(zip(t, s, P, e_minus, omega))
    c = args.fidelity_factor
    summary = {
        "N": path.N, "A": path.A, "epsilon": args.eps, "engine": args.engine,
        "T": schedule.T, "final_eps_t": args.eps * schedule.T,
        "final_fidelity": fidelity, "min_P_minus": float(np.min(P)),
        "success_threshold": 1.0 - c * args.eps**2,
        "success": bool(fidelity >= 1.0 - c * args.eps**2),
        "max_norm_drift": drift,
    }
    summary.update(extra)
    return header, rows, summary, True


def cmd_audit(args):
    problem = _problem(args)
    if problem.path.N > AUDIT_CAP:
        raise ConfigError(f"audit is capped at N={AUDIT_CAP}")
    schedule = _schedule(args, problem)
    report = audit_theorem(problem.path, schedule, gauge=args.gauge)
    N = report.overlaps.shape[0]
    header = ["m"] + [f"m{j}" for j in range(N)]
    rows = [[i] + list(report.overlaps[i]) for i in range(N)]
    summary = report.to_dict()
    summary["epsilon"] = args.eps
    summary["A"] = problem.path.A
    return header, rows, summary, not report.failures or len(report.failures) < report.N


COMMANDS = {
    "spectrum": cmd_spectrum,
    "tmin": cmd_tmin,
    "scan": cmd_scan,
    "evolve": cmd_evolve,
    "audit": cmd_audit,
}


def main(argv: Optional[Sequence[str]] = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = parse_args(sys.argv[1:] if argv is None else argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_INVALID
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        stream=stderr, format="%(levelname)s %(name)s: %(message)s")
    try:
        header, rows, summary, ok = COMMANDS[args.command](args)
    except (ConfigError, DomainError, CapExceededError, ValueError) as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_INVALID
    except (NonConvergenceError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=stderr)
        return EXIT_NUMERICAL

    summary = {"schema_version": SCHEMA_VERSION, "command": args.command,
               "config": _config_echo(args), **summary}
    if args.format == "json":
        doc = dict(summary)
        doc["columns"] = header
        doc["rows"] = [list(r) for r in rows]
        _write(args.out, dumps_json(doc), stdout)
    else:
        _write(args.out, csv_text(header, rows), stdout)
        if args.summary:
            _write(args.summary, dumps_json(summary), stdout)
    return EXIT_OK if ok else EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
