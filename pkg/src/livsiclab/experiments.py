"""Scripted reproductions: Chebyshev coboundary, renormalisation obstruction,
intermittent scaling and a parameter scan of the quadratic family.

Each experiment returns a :class:`Report` whose rows carry the tolerance
they were judged against.
"""
from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import jsonschema
import numpy as np

from . import kernels
from .dynamics.maps import builtin
from .dynamics.orbits import mean_log_derivative, periodic_points
from .io import write_csv
from .livsic.cocycle import log_derivative_cocycle
from .livsic.obstruction import periodic_obstruction
from .livsic.reconstruct import reconstruct_coboundary_on_grid
from .livsic.regularity import mp_regularity_gate

__all__ = [
    "Report",
    "ConfigError",
    "ConjugacyError",
    "chebyshev_h",
    "chebyshev_psi",
    "chebyshev_case",
    "renormalization_case",
    "mp_scaling_experiment",
    "corphi_scan",
    "SCHEMAS",
    "validate_config",
    "run_config",
    "EXPERIMENTS",
    "RENORMALIZATION_A",
]

RENORMALIZATION_A = 1.54368901


class ConfigError(ValueError):
    def __init__(self, errors: Sequence[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class ConjugacyError(RuntimeError):
    pass


@dataclass
class Report:
    name: str
    columns: list
    rows: list
    verdicts: dict = field(default_factory=dict)
    values: dict = field(default_factory=dict)
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return all(self.verdicts.values())

    def to_csv(self, path) -> Path:
        return write_csv(path, self.columns, self.rows)


# ---------------------------------------------------------------- Chebyshev

def chebyshev_h(t):
    """Conjugacy from the slope-2 tent on [0, 1] to 1 - 2x^2 on [-1, 1]."""
    return -np.cos(np.pi * np.asarray(t, dtype=float))


def chebyshev_psi(x):
    """log|h' o h^-1|(x) = log(pi) + log(1 - x^2) / 2; solves psi o f - psi = log|f'| - log 2."""
    x = np.asarray(x, dtype=float)
    return math.log(math.pi) + 0.5 * np.log1p(-x * x)


def _conjugacy_defect(points: int = 1001) -> float:
    tent = builtin("chebyshev_tent")
    quad = builtin("quadratic", a=2.0)
    t = np.linspace(0.0, 1.0, points)
    return float(np.max(np.abs(chebyshev_h(tent(t)) - quad(chebyshev_h(t)))))


def chebyshev_case(grid_size: int = 128, tol: float = 1e-4, seed: int = 0, max_period: int = 8,
                   obstruction_tol: float = 1e-8, mean_tol: float = 1e-4, lo: float = -0.9,
                   hi: float = 0.9, anchor_length: int = 200) -> Report:
    t0 = time.perf_counter()
    defect = _conjugacy_defect()
    if defect > 1e-10:
        raise ConjugacyError(f"h o T != f o h: defect {defect:.3g}")
    quad = builtin("quadratic", a=2.0)
    phi = log_derivative_cocycle(quad, math.log(2.0))
    obs = periodic_obstruction(phi, quad, max_period, tol=obstruction_tol)
    grid = np.linspace(lo, hi, grid_size)
    ref = 0.0
    psi_hat = reconstruct_coboundary_on_grid(phi, quad, ref, grid, seed=seed,
                                             anchor_length=anchor_length)
    rec = np.array([v.values[0] for v in psi_hat.values])
    exact = chebyshev_psi(psi_hat.points) - chebyshev_psi(ref)
    dev = float(np.max(np.abs(rec - exact)))
    mean, _ = mean_log_derivative(quad)
    mean -= math.log(2.0)
    rows = [
        ("conjugacy_defect", defect, 1e-10, defect <= 1e-10),
        ("max_obstruction_residual", obs.max_residual, obstruction_tol, obs.max_residual < obstruction_tol),
        ("sup_deviation", dev, tol, dev < tol),
        ("mean_phi", abs(mean), mean_tol, abs(mean) < mean_tol),
    ]
    rep = Report("chebyshev", ["check", "value", "tolerance", "pass"], rows,
                 {r[0]: bool(r[3]) for r in rows},
                 {"sup_deviation": dev, "max_residual": obs.max_residual, "mean_phi": mean,
                  "orbits": len(obs.rows)})
    rep.values["grid"] = psi_hat
    rep.seconds = time.perf_counter() - t0
    return rep


# ---------------------------------------------------------------- renormalisation

def _period2_orbit(fmap):
    orbs = periodic_points(fmap, 2)
    if not orbs:
        raise RuntimeError("no period-2 orbit")
    return orbs[0]


def renormalization_case(a_values: Sequence[float] = (2.0, RENORMALIZATION_A, 1.6, 1.9, 1.2),
                         lyapunov_iters: int = 2_000_000, seed: int = 0, identity_tol: float = 1e-9,
                         chebyshev_tol: float = 1e-6, residual_min: float = 0.01,
                         log2_residual_min: float = 0.1) -> Report:
    """Period-2 multipliers 4|1 - a| against the rate of the invariant measure.

    ``residual_vs_lambda`` = |log 4|1-a| - 2 lambda_bar| is the cycle test with
    the measured exponent; ``residual_vs_log2`` compares against log 2 per
    step and ``renormalized_residual`` against log 2 per period of the
    renormalised map f^2.
    """
    t0 = time.perf_counter()
    cols = ["a", "lambda_bar", "lambda_method", "q1", "q2", "multiplier", "identity_error",
            "fixed_point_residual", "residual_vs_lambda", "residual_vs_log2",
            "renormalized_residual", "max_residual_period_le2", "tolerance", "pass"]
    rows, verdicts = [], {}
    for a in a_values:
        f = builtin("quadratic", a=float(a))
        lam, how = mean_log_derivative(f, N=lyapunov_iters, seed=seed)
        orb = _period2_orbit(f)
        q1, q2 = orb.points
        mult = abs(f.derivative(q1) * f.derivative(q2))
        ident = abs(mult - 4.0 * abs(1.0 - a))
        fixed = [o for o in periodic_points(f, 1) if abs(o.points[0] - f.interval[0]) > 1e-12]
        fp_res = max(abs(o.log_multiplier - lam) for o in fixed)
        r_lam = abs(math.log(4.0 * abs(1.0 - a)) - 2.0 * lam)
        r_log2 = abs(math.log(4.0 * abs(1.0 - a)) - 2.0 * math.log(2.0))
        r_ren = abs(math.log(4.0 * abs(1.0 - a)) - math.log(2.0))
        worst = max(fp_res, r_lam)
        if a == 2.0:
            tol, ok = chebyshev_tol, r_lam < chebyshev_tol and worst < chebyshev_tol
        elif abs(a - RENORMALIZATION_A) < 1e-12:
            tol, ok = log2_residual_min, r_log2 > log2_residual_min and worst > residual_min
        else:
            tol, ok = residual_min, worst > residual_min
        ok = ok and ident < identity_tol
        verdicts[f"a={a:.10g}"] = bool(ok)
        rows.append((float(a), lam, how, q1, q2, mult, ident, fp_res, r_lam, r_log2, r_ren, worst, tol,
                     bool(ok)))
    values = {f"a={r[0]:.10g}": {"multiplier": r[5], "residual_vs_lambda": r[8], "residual_vs_log2": r[9],
                                 "renormalized_residual": r[10]} for r in rows}
    rep = Report("renormalization", cols, rows, verdicts, values)
    rep.seconds = time.perf_counter() - t0
    return rep


# ---------------------------------------------------------------- intermittent scaling

def _tail_exponent(n, terms, start):
    sel = n >= start
    return -float(np.polyfit(np.log(n[sel]), np.log(terms[sel]), 1)[0])


def mp_scaling_experiment(p: float, alphas: Optional[Sequence[float]] = None, depth: int = 10_000,
                          fit_from: int = 10, exponent_tol: float = 0.10,
                          cauchy_from: Optional[int] = None) -> Report:
    """diam T^-n([1/2, 1]) along the left branch and the summed Hölder bound.

    The partial sums S_N = sum diam_n^alpha are Cauchy iff the fitted decay
    exponent of the terms exceeds 1; this is compared with alpha > p/(1+p).
    """
    if p <= 0:
        raise ValueError("p must be positive")
    t0 = time.perf_counter()
    thr = p / (1.0 + p)
    if alphas is None:
        alphas = [round(thr + 0.1, 10), round(thr - 0.1, 10)]
    x = kernels.mp_left_preimages(p, 0.5, depth)
    ends = np.concatenate([[0.5], x])
    diam = ends[:-1] - ends[1:]
    n = np.arange(1, depth + 1, dtype=float)
    slope = -_tail_exponent(n, diam, fit_from)
    target = -(1.0 + p) / p
    rel = abs(slope - target) / abs(target)
    cols = ["quantity", "alpha", "value", "reference", "tolerance", "pass"]
    rows = [("diameter_exponent", "", slope, target, exponent_tol, rel <= exponent_tol)]
    verdicts = {"diameter_exponent": rel <= exponent_tol}
    start = cauchy_from or max(fit_from, depth // 10)
    for al in alphas:
        terms = diam ** al
        s = _tail_exponent(n, terms, start)
        partial = np.cumsum(terms)
        cauchy = s > 1.0
        gate = mp_regularity_gate(p, al)
        ok = cauchy == gate
        rows.append(("partial_sum_decay", al, s, 1.0, 0.0, ok))
        rows.append(("partial_sum_final", al, float(partial[-1]), float(partial[start - 1]), 0.0, ok))
        verdicts[f"cauchy_alpha={al:.6g}"] = bool(ok)
    rep = Report(f"mp_scaling(p={p:g})", cols, rows, verdicts,
                 {"exponent": slope, "target": target, "threshold": thr,
                  "preimage_ratio": float(x[-1] / (0.5 * (p * depth) ** (-1.0 / p)))})
    rep.seconds = time.perf_counter() - t0
    return rep


# ---------------------------------------------------------------- parameter scan

def corphi_scan(a_min: float = 1.45, a_max: float = 2.0, steps: int = 12, max_period: int = 8,
                lyapunov_iters: int = 1_000_000, tol: float = 1e-6, lambda_floor: float = 1e-3,
                seed: int = 0, a_values: Optional[Sequence[float]] = None) -> Report:
    """Obstruction residuals of log|f'| - lambda_bar across the quadratic family.

    Parameters with lambda_bar <= ``lambda_floor`` (attracting cycles, to
    within the resolution of a finite Birkhoff average) are skipped.
    """
    if not (1.4 < a_min <= a_max <= 2.0):
        raise ValueError("scan range must lie in (1.4, 2]")
    t0 = time.perf_counter()
    grid = list(a_values) if a_values is not None else list(np.linspace(a_min, a_max, steps))
    cols = ["a", "lambda_bar", "lambda_method", "max_residual", "tolerance", "status"]
    rows, verdicts = [], {}
    for a in grid:
        a = float(a)
        f = builtin("quadratic", a=a)
        lam, how = mean_log_derivative(f, N=lyapunov_iters, seed=seed)
        if lam <= lambda_floor:
            rows.append((a, lam, how, math.nan, tol, "skipped"))
            continue
        phi = log_derivative_cocycle(f, lam)
        obs = periodic_obstruction(phi, f, max_period, tol=tol)
        status = obs.verdict
        rows.append((a, lam, how, obs.max_residual, tol, status))
        expected = "coboundary-consistent" if abs(a - 2.0) < 1e-12 else "obstructed"
        verdicts[f"a={a:.10g}"] = status == expected
    rep = Report("corphi", cols, rows, verdicts)
    rep.seconds = time.perf_counter() - t0
    return rep


# ---------------------------------------------------------------- configs

_COMMON = {
    "experiment": {"type": "string"},
    "seed": {"type": "integer", "minimum": 0},
    "output": {"type": "string"},
}


def _schema(props, required=()):
    return {
        "type": "object",
        "properties": {**_COMMON, **props},
        "required": list(required),
        "additionalProperties": False,
    }


_pos = {"type": "number", "exclusiveMinimum": 0}
_posint = {"type": "integer", "minimum": 1}

SCHEMAS = {
    "chebyshev": _schema({
        "grid_size": {"type": "integer", "minimum": 2},
        "tol": _pos,
        "max_period": {"type": "integer", "minimum": 1, "maximum": 12},
        "obstruction_tol": _pos,
        "anchor_length": {"type": "integer", "minimum": 20},
    }),
    "renormalization": _schema({
        "a_values": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0, "maximum": 2},
                     "minItems": 1},
        "lyapunov_iters": {"type": "integer", "minimum": 10000},
        "identity_tol": _pos,
        "chebyshev_tol": _pos,
        "residual_min": _pos,
    }),
    "mp_scaling": _schema({
        "p": _pos,
        "alphas": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0, "maximum": 1}},
        "depth": {"type": "integer", "minimum": 100},
        "fit_from": _posint,
        "exponent_tol": _pos,
    }, required=["p"]),
    "corphi": _schema({
        "a_min": {"type": "number", "exclusiveMinimum": 1.4, "maximum": 2},
        "a_max": {"type": "number", "exclusiveMinimum": 1.4, "maximum": 2},
        "steps": _posint,
        "a_values": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 1.4, "maximum": 2}},
        "max_period": {"type": "integer", "minimum": 1, "maximum": 12},
        "lyapunov_iters": {"type": "integer", "minimum": 10000},
        "tol": _pos,
        "lambda_floor": {"type": "number"},
    }),
}

EXPERIMENTS = {
    "chebyshev": chebyshev_case,
    "renormalization": renormalization_case,
    "mp_scaling": mp_scaling_experiment,
    "corphi": corphi_scan,
}


def validate_config(name: str, cfg: dict) -> None:
    """Raise ConfigError listing every schema violation at once."""
    if name not in SCHEMAS:
        raise ConfigError([f"unknown experiment {name!r}; choose from {sorted(SCHEMAS)}"])
    v = jsonschema.Draft202012Validator(SCHEMAS[name])
    errs = sorted(v.iter_errors(cfg), key=lambda e: list(e.path))
    msgs = [f"{'/'.join(map(str, e.path)) or '<root>'}: {e.message}" for e in errs]
    if cfg.get("experiment", name) != name:
        msgs.append(f"experiment: config is for {cfg['experiment']!r}, not {name!r}")
    if msgs:
        raise ConfigError(msgs)


def run_config(name: str, cfg: dict) -> Report:
    validate_config(name, cfg)
    kw = {k: v for k, v in cfg.items() if k not in ("experiment", "output")}
    if "seed" in kw and name == "mp_scaling":
        kw.pop("seed")
    return EXPERIMENTS[name](**kw)


def load_config(path) -> dict:
    with open(path) as fh:
        return json.load(fh)
