"""Command-line entry point: ``empldp <command> [options]``.

Exit codes: 0 success, 1 domain error, 2 usage error. JSON is the machine
interface; CSV is for plotting. Both carry ``schema_version`` "1".
"""

from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
from pathlib import Path
from typing import Any, Callable, Optional

import numpy as np

from . import exp_gap, kolmogorov_bound, limit_process, rare_event_mc, rate_functions
from .cdf_model import parse_dist
from .empirical_process import decompose, draw_sample, sup_deviation
from .errors import EmpLDPError
from .paths import GridPath, uniform_grid

SCHEMA_VERSION = "1"
SEED_ENV = "EMPLDP_SEED"
# options that steer I/O or parallelism but never change the numbers
_IO_KEYS = {"config", "out", "csv", "format", "workers", "command"}


class UsageError(Exception):
    pass


# -- argument parsing ------------------------------------------------------------------


def _int_list(text: str) -> list[int]:
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _bool(text: str) -> bool:
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


# per-command: (handler, {dest: default}, required dests)
_COMMANDS: dict[str, tuple[Callable, dict, tuple]] = {}


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key=value file; explicit flags win")
    p.add_argument("--seed", type=int, help=f"random seed (default ${SEED_ENV} or 0)")
    p.add_argument("--out", help="write the primary output here instead of stdout")
    p.add_argument("--csv", help="also write CSV data to this file")
    p.add_argument("--format", choices=("json", "csv"), help="primary output format (default json)")
    p.add_argument("--workers", type=int, help="worker threads (never changes results)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="empldp", description="Empirical-process bounds, rates and rare-event estimates.")
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    sub.required = True

    def add(name, help, defaults, required=()):
        p = sub.add_parser(name, help=help)
        _common(p)
        p.set_defaults(command=name)

        def register(fn):
            _COMMANDS[name] = (fn, defaults, required)
            return fn
        return p, register

    p, reg = add("bound", "exponential bound 2 exp(-n delta)",
                 {"dist": "uniform"}, ("epsilon", "n"))
    p.add_argument("--epsilon", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--dist")
    reg(_cmd_bound)

    p, reg = add("simulate", "draw a sorted sample", {"dist": "uniform", "horizon": 1.0}, ("n",))
    p.add_argument("--n", type=int)
    p.add_argument("--dist")
    p.add_argument("--horizon", type=float)
    reg(_cmd_simulate)

    p, reg = add("exact-tail", "exact P(sup|F_n - F| >= d)", {}, ("n", "d"))
    p.add_argument("--n", type=int)
    p.add_argument("--d", type=float)
    reg(_cmd_exact_tail)

    p, reg = add("mc", "crude or importance-sampled tail estimate",
                 {"dist": "uniform", "horizon": 1.0, "trials": 10_000, "tilt": None}, ("n", "d"))
    p.add_argument("--dist")
    p.add_argument("--n", type=int)
    p.add_argument("--d", type=float)
    p.add_argument("--horizon", type=float)
    p.add_argument("--trials", type=int)
    p.add_argument("--tilt", type=float, help="tent tilt delta; omit for crude MC")
    reg(_cmd_mc)

    p, reg = add("ldp-scan", "normalized log tail across n",
                 {"dist": "uniform", "horizon": 1.0, "trials": 100_000}, ("alpha", "epsilon", "n"))
    p.add_argument("--dist")
    p.add_argument("--alpha", type=float)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--n", type=_int_list)
    p.add_argument("--horizon", type=float)
    p.add_argument("--trials", type=int)
    reg(_cmd_ldp_scan)

    p, reg = add("pointwise-scan", "exact binomial tail at the median across n",
                 {"dist": "uniform"}, ("alpha", "epsilon", "n"))
    p.add_argument("--dist")
    p.add_argument("--alpha", type=float)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--n", type=_int_list)
    reg(_cmd_pointwise_scan)

    p, reg = add("rate", "rate functional J_T of a path, or the optimal path",
                 {"dist": "uniform", "optimal": False, "points": 1025}, ())
    p.add_argument("--dist")
    p.add_argument("--path", help="GridPath CSV (header t,value)")
    p.add_argument("--horizon", type=float)
    p.add_argument("--optimal", action="store_const", const=True)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--points", type=int)
    reg(_cmd_rate)

    p, reg = add("limit", "simulate the Gaussian limit process",
                 {"dist": "uniform", "grid": 1025, "trials": 10_000, "method": "psi",
                  "level": limit_process.DEFAULT_HORIZON_LEVEL, "csv_paths": 10}, ())
    p.add_argument("--dist")
    p.add_argument("--grid", type=int, help="number of grid points")
    p.add_argument("--trials", type=int)
    p.add_argument("--method", choices=("psi", "sde"))
    p.add_argument("--level", type=float, help="F(T) at the horizon")
    p.add_argument("--csv-paths", type=int, help="paths written to --csv")
    reg(_cmd_limit)

    p, reg = add("expgap", "stochastic-exponential gap check",
                 {"dist": "uniform", "alpha": 0.25, "lambda": "const:1.0", "eta": 0.1,
                  "trials": 1000, "horizon": None}, ("n",))
    p.add_argument("--dist")
    p.add_argument("--n", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--lambda", dest="lambda")
    p.add_argument("--eta", type=float)
    p.add_argument("--trials", type=int)
    p.add_argument("--horizon", type=float)
    reg(_cmd_expgap)

    p, reg = add("decompose", "martingale decomposition of one sample",
                 {"dist": "uniform", "alpha": 0.25, "points": 1025, "level": 0.95}, ("n",))
    p.add_argument("--dist")
    p.add_argument("--n", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--points", type=int)
    p.add_argument("--level", type=float)
    reg(_cmd_decompose)

    return parser


# -- config ----------------------------------------------------------------------------


def load_config(path: str, sub: argparse.ArgumentParser) -> dict:
    """Parse a flat key=value file against the subcommand's options."""
    actions = {a.dest: a for a in sub._actions if a.dest not in ("help", "config", "command")}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config {path!r}: {exc}")
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key = key.strip().replace("-", "_")
        if not sep or not key:
            raise UsageError(f"{path}:{lineno}: malformed line (expected key=value): {raw!r}")
        if key not in actions:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        action = actions[key]
        value = value.strip()
        try:
            if isinstance(action, argparse._StoreConstAction):
                out[key] = _bool(value)
            else:
                conv = action.type or str
                out[key] = conv(value)
                if action.choices and out[key] not in action.choices:
                    raise ValueError(f"must be one of {list(action.choices)}")
        except (ValueError, argparse.ArgumentTypeError) as exc:
            raise UsageError(f"{path}:{lineno}: bad value for {key!r}: {exc}")
    return out


def resolve(argv: list[str]) -> dict:
    """Parsed flags merged over config file, environment and defaults."""
    parser = build_parser()
    ns = parser.parse_args(argv)
    flags = {k: v for k, v in vars(ns).items() if v is not None}
    command = flags["command"]
    _, defaults, required = _COMMANDS[command]
    sub = parser._subparsers._group_actions[0].choices[command]
    merged: dict[str, Any] = {"format": "json", "workers": None}
    merged.update(defaults)
    env_seed = os.environ.get(SEED_ENV)
    if env_seed is not None:
        try:
            merged["seed"] = int(env_seed)
        except ValueError:
            raise UsageError(f"{SEED_ENV} must be an integer, got {env_seed!r}")
    else:
        merged["seed"] = 0
    if "config" in flags:
        merged.update(load_config(flags["config"], sub))
    merged.update(flags)
    for a in sub._actions:
        merged.setdefault(a.dest, None)
    merged.pop("help", None)
    missing = [k for k in required if merged.get(k) is None]
    if missing:
        sub.print_usage(sys.stderr)
        raise UsageError(f"empldp {command}: missing required option(s): "
                         + ", ".join("--" + m.replace("_", "-") for m in missing))
    return merged


# -- output ----------------------------------------------------------------------------


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def config_echo(cfg: dict) -> dict:
    return {k: v for k, v in sorted(cfg.items()) if k not in _IO_KEYS}


def render_json(command: str, cfg: dict, result: dict) -> str:
    doc = {"schema_version": SCHEMA_VERSION, "command": command, "config": config_echo(cfg)}
    doc.update(result)
    return json.dumps(_clean(doc), indent=2, allow_nan=False) + "\n"


def render_csv(header: list[str], rows) -> str:
    buf = io.StringIO()
    buf.write(f"# schema_version={SCHEMA_VERSION}\n")
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(_csv_cell(v) for v in row) + "\n")
    return buf.getvalue()


def _csv_cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def _path_csv(path: GridPath) -> str:
    return f"# schema_version={SCHEMA_VERSION}\n" + path.to_csv()


class Output:
    """What a command produced: a JSON result plus an optional CSV table."""

    def __init__(self, result: dict, csv_text: Optional[str] = None, warnings=()):
        self.result = result
        self.csv_text = csv_text
        self.warnings = list(warnings)


# -- commands --------------------------------------------------------------------------


def _cmd_bound(cfg):
    rep = kolmogorov_bound.bound(cfg["epsilon"], cfg["n"], parse_dist(cfg["dist"]))
    d = rep.to_dict()
    warn = [f"bound {rep.bound:.6g} >= 1 is trivial at n={rep.n}"] if rep.trivial else []
    csv_text = render_csv(list(d), [list(d.values())])
    return Output(d, csv_text, warn)


def _cmd_simulate(cfg):
    F = parse_dist(cfg["dist"])
    s = draw_sample(F, cfg["n"], cfg["seed"])
    dev = sup_deviation(s, F, cfg["horizon"])
    result = {"n": s.n, "sup_deviation": dev, "points": s.points}
    return Output(result, f"# schema_version={SCHEMA_VERSION}\n" + s.to_csv())


_SCAN_HEADER = ["n", "d", "p", "log_normalized", "target"]


def _scan_csv(records) -> str:
    return render_csv(_SCAN_HEADER, [[r.n, r.d, r.probability,
                                      r.log_normalized if r.log_normalized is not None else math.nan,
                                      r.target if r.target is not None else math.nan] for r in records])


def _cmd_exact_tail(cfg):
    est = rare_event_mc.exact_estimate(cfg["n"], cfg["d"])
    return Output({"records": [est.to_dict()]}, _scan_csv([est]))


def _warn_ess(records):
    return [f"n={r.n}: effective sample size {r.ess:.1f} below {rare_event_mc.MIN_ESS}; estimate unreliable"
            for r in records if r.method == "importance" and not r.reliable]


def _cmd_mc(cfg):
    F = parse_dist(cfg["dist"])
    if cfg["tilt"] is None:
        est = rare_event_mc.crude_mc(F, cfg["n"], cfg["d"], cfg["horizon"], cfg["trials"],
                                     cfg["seed"], cfg["workers"])
    else:
        est = rare_event_mc.importance_mc(F, cfg["n"], cfg["d"], cfg["horizon"], cfg["trials"],
                                          rare_event_mc.TiltSpec(cfg["tilt"]), cfg["seed"], cfg["workers"])
    return Output({"records": [est.to_dict()]}, _scan_csv([est]), _warn_ess([est]))


def _cmd_ldp_scan(cfg):
    recs = rare_event_mc.ldp_scan(parse_dist(cfg["dist"]), cfg["alpha"], cfg["epsilon"], cfg["n"],
                                  cfg["horizon"], cfg["trials"], cfg["seed"], cfg["workers"])
    return Output({"records": [r.to_dict() for r in recs]}, _scan_csv(recs), _warn_ess(recs))


def _cmd_pointwise_scan(cfg):
    recs = rare_event_mc.pointwise_scan(parse_dist(cfg["dist"]), cfg["alpha"], cfg["epsilon"],
                                        cfg["n"], cfg["seed"])
    return Output({"records": [r.to_dict() for r in recs]}, _scan_csv(recs))


def _cmd_rate(cfg):
    F = parse_dist(cfg["dist"])
    if cfg["optimal"]:
        if cfg["epsilon"] is None:
            raise UsageError("empldp rate: --optimal needs --epsilon")
        u = rate_functions.optimal_path(cfg["epsilon"], F, rate_functions.optimal_grid(F, cfg["points"]))
        J = rate_functions.rate_J(u, F)
        return Output({"J": J, "theta": u.horizon, "target": 2.0 * cfg["epsilon"] ** 2}, _path_csv(u))
    if cfg["path"] is None:
        raise UsageError("empldp rate: give --path FILE or --optimal --epsilon E")
    try:
        u = GridPath.read_csv(cfg["path"])
    except OSError as exc:
        raise UsageError(f"cannot read path {cfg['path']!r}: {exc}")
    T = cfg["horizon"] if cfg["horizon"] is not None else u.horizon
    J = rate_functions.rate_J(u, F, T)
    I_inv = rate_functions.rate_J_via_inverse(u, F, T)
    residual = abs(J - I_inv) if math.isfinite(J) and math.isfinite(I_inv) else math.nan
    return Output({"J": J, "I_of_inverse": I_inv, "residual": residual})


_LIMIT_PAIRS = ((0.1, 0.1), (0.2, 0.5), (0.3, 0.7), (0.5, 0.5), (0.5, 0.9))


def _cmd_limit(cfg):
    F = parse_dist(cfg["dist"])
    T = float(F.quantile(cfg["level"]))
    grid = uniform_grid(T, cfg["grid"])
    if cfg["method"] == "psi":
        batch = limit_process.limit_via_psi(
            limit_process.simulate_gaussian_martingale(F, grid, cfg["trials"], cfg["seed"]), F)
    else:
        batch = limit_process.limit_via_sde(F, grid, cfg["trials"], cfg["seed"])
    pairs = [(s * T, t * T) for s, t in _LIMIT_PAIRS]
    rows = limit_process.covariance_check(batch, F, pairs) if batch.count >= 100 else []
    sup = np.abs(batch.values).max(axis=1)
    result = {
        "method": batch.method,
        "count": batch.count,
        "horizon": T,
        "covariance": [r.to_dict() for r in rows],
        "sup_abs_median": float(np.median(sup)),
        "sup_abs_mean": float(np.mean(sup)),
    }
    csv_text = f"# schema_version={SCHEMA_VERSION}\n" + batch.to_csv(cfg["csv_paths"])
    return Output(result, csv_text)


def _cmd_expgap(cfg):
    summary = exp_gap.gap_check(parse_dist(cfg["dist"]), exp_gap.parse_lambda(cfg["lambda"]), cfg["n"],
                                cfg["alpha"], cfg["trials"], cfg["eta"], cfg["seed"], cfg["horizon"],
                                workers=cfg["workers"])
    d = summary.to_dict()
    csv_text = render_csv(["trial", "sup_gap"], list(enumerate(summary.sup_gaps)))
    return Output(d, csv_text)


def _cmd_decompose(cfg):
    F = parse_dist(cfg["dist"])
    s = draw_sample(F, cfg["n"], cfg["seed"])
    grid = uniform_grid(float(F.quantile(cfg["level"])), cfg["points"])
    dec = decompose(s, F, cfg["alpha"], grid)
    result = {
        "n": s.n,
        "residuals": dec.residuals,
        "sup_x": dec.x_path.sup_norm(),
        "sup_m": dec.m_path.sup_norm(),
        "a_terminal": float(dec.a_path.values[-1]),
    }
    rows = zip(grid, dec.x_path.values, dec.m_path.values, dec.a_path.values)
    return Output(result, render_csv(["t", "x", "m", "a"], rows))


# -- dispatch --------------------------------------------------------------------------


def _emit(text: str, target: Optional[str]) -> None:
    if target:
        Path(target).write_text(text)
    else:
        sys.stdout.write(text)


def parse_and_dispatch(argv: Optional[list[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        cfg = resolve(argv)
        handler = _COMMANDS[cfg["command"]][0]
        out = handler(cfg)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except EmpLDPError as exc:
        print(f"empldp {argv[0] if argv else ''}: {exc}", file=sys.stderr)
        return 1
    for w in out.warnings:
        print(f"warning: {w}", file=sys.stderr)
    if cfg["format"] == "csv":
        if out.csv_text is None:
            print(f"empldp {cfg['command']}: no CSV form", file=sys.stderr)
            return 2
        primary = out.csv_text
    else:
        primary = render_json(cfg["command"], cfg, out.result)
    _emit(primary, cfg["out"])
    if cfg["csv"] and out.csv_text is not None:
        Path(cfg["csv"]).write_text(out.csv_text)
    return 0


def main() -> None:
    sys.exit(parse_and_dispatch())
