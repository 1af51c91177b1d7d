"""Command-line front end.

Every subcommand writes a CSV table and ``<name>_summary.json`` ({verdicts,
timings, values}) into the output directory: ``--out`` if given, else
``$LIVSIC_OUT``, else ``./livsic_out``.  Exit status is 0 when every verdict
passes, 1 on a failed assertion and 2 on a usage or configuration error.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import time
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import experiments as ex
from .io import write_json

log = logging.getLogger("livsic")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
CONFIG_DIR = Path(__file__).with_name("configs")
MAPS = ("doubling", "tent", "quadratic", "manneville_pomeau", "mp", "chebyshev_tent")
COCYCLES = ("logderiv", "sin", "square", "piecewise")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


# ---------------------------------------------------------------- helpers

def parse_override(text: str):
    """'key=value' with value read as JSON when possible, else as a string."""
    key, sep, raw = text.partition("=")
    key = key.strip()
    if not sep or not key:
        raise UsageError(f"malformed override {text!r}; expected key=value")
    try:
        val = json.loads(raw)
    except json.JSONDecodeError:
        val = raw
    return key, val


def resolve_config(path: str) -> Path:
    p = Path(path)
    if p.exists():
        return p
    q = CONFIG_DIR / p.name
    if q.exists():
        return q
    raise UsageError(f"config {path!r} not found (also looked in {CONFIG_DIR})")


def output_dir(arg: Optional[str]) -> Path:
    out = Path(arg or os.environ.get("LIVSIC_OUT") or "livsic_out")
    out.mkdir(parents=True, exist_ok=True)
    return out


def build_map(args, need_density: bool = False):
    from .dynamics.maps import builtin, estimate_density

    params = {}
    if args.map == "quadratic":
        params["a"] = args.a if args.a is not None else 2.0
    elif args.map == "tent":
        params["slope"] = args.slope if args.slope is not None else 2.0
    elif args.map in ("manneville_pomeau", "mp"):
        params["p"] = args.p if args.p is not None else 1.0
    try:
        f = builtin(args.map, **params)
    except ValueError as e:
        raise UsageError(str(e))
    if need_density and f.density is None:
        log.info("estimating the invariant density of %s", f.name)
        f = estimate_density(f, iters=getattr(args, "density_iters", 10_000_000), seed=args.seed)
    return f


def _finish(out: Path, name: str, verdicts: dict, timings: dict, values: dict) -> int:
    summary = {"command": name, "verdicts": verdicts, "timings": timings, "values": values}
    write_json(out / f"{name.split()[-1]}_summary.json", summary)
    for k, v in verdicts.items():
        log.info("%-32s %s", k, "PASS" if v else "FAIL")
    print(json.dumps({"verdicts": verdicts, "values": values}, sort_keys=True, default=float))
    return EXIT_OK if all(verdicts.values()) else EXIT_FAIL


def _clean(v):
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    if isinstance(v, np.integer):
        return int(v)
    return v


# ---------------------------------------------------------------- subcommands

def cmd_experiment(args) -> int:
    cfg = {}
    if args.config:
        path = resolve_config(args.config)
        with open(path) as fh:
            try:
                cfg = json.load(fh)
            except json.JSONDecodeError as e:
                raise UsageError(f"{path}: invalid JSON: {e}")
    for item in args.set or []:
        k, v = parse_override(item)
        if k in cfg:
            log.info("override %s: %r -> %r", k, cfg[k], v)
        else:
            log.info("override %s = %r", k, v)
        cfg[k] = v
    try:
        ex.validate_config(args.name, cfg)
    except ex.ConfigError as e:
        for m in e.errors:
            print(f"config error: {m}", file=sys.stderr)
        return EXIT_USAGE
    out = output_dir(args.out or cfg.get("output"))
    t0 = time.perf_counter()
    rep = ex.run_config(args.name, cfg)
    rep.to_csv(out / f"{args.name}.csv")
    values = {k: _clean(v) for k, v in rep.values.items() if not hasattr(v, "points")}
    return _finish(out, f"experiment {args.name}", rep.verdicts,
                   {"total": time.perf_counter() - t0}, values)


def cmd_obstruction(args) -> int:
    from .dynamics.orbits import mean_log_derivative
    from .livsic.cocycle import log_derivative_cocycle
    from .livsic.obstruction import periodic_obstruction

    out = output_dir(args.out)
    t0 = time.perf_counter()
    f = build_map(args)
    if args.shift is not None:
        lam, how = args.shift, "given"
    else:
        lam, how = mean_log_derivative(f, N=args.iters, seed=args.seed)
    t1 = time.perf_counter()
    phi = log_derivative_cocycle(f, lam)
    rep = periodic_obstruction(phi, f, args.max_period, tol=args.tol)
    rep.to_csv(out / "obstruction.csv")
    verdicts = {"verdict_" + rep.verdict.replace("-", "_"): True}
    if args.expect:
        verdicts = {f"expect_{args.expect}": rep.verdict == args.expect}
    values = {"maxResidual": rep.max_residual, "lambda_bar": lam, "lambda_method": how,
              "orbits": len(rep.rows), "excluded": rep.excluded, "verdict": rep.verdict}
    return _finish(out, "obstruction", verdicts,
                   {"lambda": t1 - t0, "obstruction": time.perf_counter() - t1}, values)


def _manufactured(name):
    if name == "sin":
        return lambda x: math.sin(2 * math.pi * x)
    if name == "square":
        return lambda x: x * x
    if name == "piecewise":
        return lambda x: x if x < 0.5 else 1.0 - x * x
    raise UsageError(f"no manufactured coboundary {name!r}")


def cmd_reconstruct(args) -> int:
    from .dynamics.orbits import mean_log_derivative
    from .livsic.cocycle import log_derivative_cocycle, real_cocycle
    from .livsic.reconstruct import coboundary_residual, reconstruct_coboundary_on_grid

    out = output_dir(args.out)
    t0 = time.perf_counter()
    f = build_map(args, need_density=True)
    lo, hi = f.interval
    if args.lo is not None or args.hi is not None:
        a, b = args.lo if args.lo is not None else lo, args.hi if args.hi is not None else hi
    elif f.name.startswith("quadratic"):
        a, b = -0.9, 0.9
    else:
        a, b = lo, lo + (hi - lo) * (1 - 1.0 / args.grid)
    grid = np.linspace(a, b, args.grid)
    values = {}
    if args.cocycle == "logderiv":
        lam, _ = mean_log_derivative(f, seed=args.seed)
        phi = log_derivative_cocycle(f, lam)
        values["lambda_bar"] = lam
        u = None
    else:
        u = _manufactured(args.cocycle)
        phi = real_cocycle(lambda x: u(float(f(x))) - u(x), name=f"{args.cocycle} o T - {args.cocycle}")
    ref = float(grid[len(grid) // 2])
    psi = reconstruct_coboundary_on_grid(phi, f, ref, grid, tol=args.tol, seed=args.seed,
                                         anchor_length=args.anchor_length)
    t1 = time.perf_counter()
    psi.to_csv(out / "reconstruct.csv")
    res = coboundary_residual(phi, psi, f)
    values["residual"] = res
    verdicts = {"residual": res < args.residual_tol}
    if u is not None:
        rec = psi.charts()[:, 0]
        exact = np.array([u(x) - u(ref) for x in psi.points])
        err = float(np.max(np.abs(rec - exact)))
        values["sup_error"] = err
        verdicts["sup_error"] = err < args.error_tol
    elif f.name.startswith("quadratic") and abs(f.params.get("a", 0) - 2.0) < 1e-15:
        rec = psi.charts()[:, 0]
        exact = ex.chebyshev_psi(psi.points) - ex.chebyshev_psi(ref)
        err = float(np.max(np.abs(rec - exact)))
        values["sup_error"] = err
        verdicts["sup_error"] = err < args.error_tol
    return _finish(out, "reconstruct", verdicts,
                   {"reconstruct": t1 - t0, "residual": time.perf_counter() - t1}, values)


def _interval(text: str):
    try:
        l, r = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected l,r got {text!r}")
    if not l < r:
        raise argparse.ArgumentTypeError("need l < r")
    return l, r


def cmd_tower(args) -> int:
    from .towers.young import TowerError, induce_first_return, kac_and_lambda

    out = output_dir(args.out)
    t0 = time.perf_counter()
    f = build_map(args)
    try:
        tw = induce_first_return(f, args.base, args.max_return)
    except TowerError as e:
        print(f"tower error: {e}", file=sys.stderr)
        return _finish(out, "tower", {"tower_built": False}, {"total": time.perf_counter() - t0},
                       {"error": str(e)})
    tw.to_csv(out / "tower.csv")
    values = {"cells": len(tw.cells), "kac_sum": tw.kac_sum, "kac_infinite": tw.kac_infinite,
              "lambda0": tw.lambda0, "tail_mass": tw.tail.mass, "tail_model": tw.tail.model,
              "tail_exponent": tw.tail.exponent}
    verdicts = {"tower_built": True}
    if not tw.kac_infinite and tw.tail.mass < 0.05:
        k = kac_and_lambda(tw, seed=args.seed)
        values.update(lambda_tower=k.lambda_tower, lambda_birkhoff=k.lambda_birkhoff)
        verdicts["lambda_ge_lambda0_root"] = bool(k.consistent)
    return _finish(out, "tower", verdicts, {"total": time.perf_counter() - t0},
                   {k: _clean(v) for k, v in values.items()})


def cmd_hofbauer(args) -> int:
    from .io import write_csv
    from .towers.hofbauer import hofbauer_build

    out = output_dir(args.out)
    t0 = time.perf_counter()
    f = build_map(args)
    h = hofbauer_build(f, args.depth, occupation_steps=args.steps, seed=args.seed, lift=args.steps > 0)
    mass = h.lifted_mass if h.lifted_mass is not None else [math.nan] * h.n_levels
    write_csv(out / "hofbauer.csv", ["level", "left", "right", "depth", "lifted_mass"],
              ((i, float(iv[0]), float(iv[1]), int(d), float(m))
               for i, (iv, d, m) in enumerate(zip(h.levels, h.level_depth, mass))))
    h.write_edge_list(out / "hofbauer_edges.txt")
    values = {"levels": h.n_levels, "overflow": h.overflow,
              "stationarity_defect": _clean(h.stationarity_defect)}
    verdicts = {"levels_found": h.n_levels >= 1}
    if args.expect_levels is not None:
        verdicts["expected_levels"] = h.n_levels == args.expect_levels
    return _finish(out, "hofbauer", verdicts, {"total": time.perf_counter() - t0}, values)


def cmd_lyapunov(args) -> int:
    from .dynamics.orbits import lyapunov_exponent

    out = output_dir(args.out)
    t0 = time.perf_counter()
    f = build_map(args)
    try:
        val = lyapunov_exponent(f, burn_in=args.burn_in, N=args.iters, seed=args.seed)
    except ValueError as e:
        raise UsageError(str(e))
    from .io import write_csv

    write_csv(out / "lyapunov.csv", ["map", "iters", "seed", "lyapunov"], [(f.name, args.iters, args.seed, val)])
    verdicts = {"finite": math.isfinite(val)}
    if args.expect is not None:
        verdicts["expected"] = abs(val - args.expect) <= args.expect_tol
    return _finish(out, "lyapunov", verdicts, {"total": time.perf_counter() - t0},
                   {"value": val, "map": f.name})


# ---------------------------------------------------------------- parser

def _map_flags(p, default="quadratic"):
    g = p.add_argument_group("map")
    g.add_argument("--map", choices=MAPS, default=default, help=f"map family (default {default})")
    g.add_argument("--a", type=float, help="quadratic parameter in (0, 2] (default 2)")
    g.add_argument("--slope", type=float, help="tent slope in (1, 2] (default 2)")
    g.add_argument("--p", type=float, help="Manneville-Pomeau exponent (default 1)")


def _common(p):
    p.add_argument("--out", help="output directory (default $LIVSIC_OUT or ./livsic_out)")
    p.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    p.add_argument("-v", "--verbose", action="count", default=0, help="more logging")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="livsic", description="Measurable Livsic regularity laboratory.",
                 epilog="Subcommands: experiment, obstruction, reconstruct, tower, hofbauer, lyapunov. "
                        "Exit codes: 0 pass, 1 assertion failure, 2 usage/config error.")
    sub = ap.add_subparsers(dest="command", metavar="SUBCOMMAND", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("experiment", help="run a scripted experiment from a JSON config")
    p.add_argument("name", choices=sorted(ex.EXPERIMENTS), help="experiment name")
    p.add_argument("--config", help="JSON config; bare names are looked up in the bundled configs")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override a config key (repeatable, last wins)")
    _common(p)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("obstruction", help="periodic-orbit residuals of log|f'| - lambda_bar")
    _map_flags(p)
    p.add_argument("--max-period", type=int, default=8, help="largest prime period, 1..12 (default 8)")
    p.add_argument("--tol", type=float, default=1e-6, help="consistency tolerance (default 1e-6)")
    p.add_argument("--shift", type=float, help="use this constant instead of the measured lambda_bar")
    p.add_argument("--iters", type=int, default=1_000_000, help="Birkhoff iterates for lambda_bar")
    p.add_argument("--expect", choices=("coboundary-consistent", "obstructed"),
                   help="fail unless the verdict matches")
    _common(p)
    p.set_defaults(func=cmd_obstruction)

    p = sub.add_parser("reconstruct", help="reconstruct a transfer function on a grid")
    _map_flags(p)
    p.add_argument("--cocycle", choices=COCYCLES, default="logderiv",
                   help="logderiv: log|f'| - lambda_bar; sin/square/piecewise: u o T - u")
    p.add_argument("--grid", type=int, default=128, help="grid points (default 128)")
    p.add_argument("--lo", type=float, help="grid left end")
    p.add_argument("--hi", type=float, help="grid right end")
    p.add_argument("--tol", type=float, default=1e-10, help="reconstruction stopping tolerance")
    p.add_argument("--anchor-length", type=int, default=200, help="anchor backward orbit length")
    p.add_argument("--residual-tol", type=float, default=1e-2,
                   help="tolerance on the interpolated coboundary residual (default 1e-2)")
    p.add_argument("--error-tol", type=float, default=1e-4,
                   help="tolerance on the error against a known solution (default 1e-4)")
    p.add_argument("--density-iters", type=int, default=10_000_000,
                   help="orbit length for histogram densities")
    _common(p)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("tower", help="first-return Young tower over a base interval")
    _map_flags(p, default="doubling")
    p.add_argument("--base", type=_interval, default=(0.5, 1.0), help="base interval l,r (default 0.5,1)")
    p.add_argument("--max-return", type=int, default=200, help="largest return time (default 200)")
    _common(p)
    p.set_defaults(func=cmd_tower)

    p = sub.add_parser("hofbauer", help="Hofbauer tower levels and transition graph")
    _map_flags(p)
    p.add_argument("--depth", type=int, default=16, help="construction depth 1..24 (default 16)")
    p.add_argument("--steps", type=int, default=1_000_000, help="orbit length for the lifted measure; 0 skips")
    p.add_argument("--expect-levels", type=int, help="fail unless this many levels are found")
    _common(p)
    p.set_defaults(func=cmd_hofbauer)

    p = sub.add_parser("lyapunov", help="Birkhoff average of log|f'|")
    _map_flags(p, default="doubling")
    p.add_argument("--iters", type=int, default=1_000_000, help="iterates, at least 10^4 (default 10^6)")
    p.add_argument("--burn-in", type=int, default=1000, help="discarded iterates (default 1000)")
    p.add_argument("--expect", type=float, help="fail unless within --expect-tol of this value")
    p.add_argument("--expect-tol", type=float, default=1e-3, help="tolerance for --expect (default 1e-3)")
    _common(p)
    p.set_defaults(func=cmd_lyapunov)
    return ap


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(f"livsic: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as e:  # --help
        return int(e.code or 0)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except UsageError as e:
        print(f"livsic: error: {e}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
