"""Backward-orbit telescoping reconstruction of transfer functions."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..dynamics.maps import PiecewiseMap
from ..dynamics.orbits import BackwardOrbit, sample_backward_orbit
from ..io import write_csv
from ..groups import (
    GroupElement,
    ad_norm,
    conjugate,
    distance,
    identity_like,
    interpolate,
    inverse,
    multiply,
)
from .cocycle import Cocycle

__all__ = [
    "ReconstructionError",
    "BranchWordMismatch",
    "ReconstructionResult",
    "GridFunction",
    "reconstruct_transfer",
    "reconstruct_coboundary_on_grid",
    "coboundary_residual",
    "twisted_residual",
]


class ReconstructionError(RuntimeError):
    """Successive differences did not decay geometrically."""


class BranchWordMismatch(ValueError):
    pass


@dataclass
class ReconstructionResult:
    value: GroupElement
    iterations: int
    diffs: np.ndarray
    bounds: np.ndarray = field(repr=False)
    rate: float
    converged: bool = True

    def telescoping_slack(self) -> float:
        """max over steps of diff - bound (should be <= rounding)."""
        if len(self.diffs) == 0:
            return 0.0
        return float(np.max(self.diffs - self.bounds))


def _geometric_ratio(d: np.ndarray) -> float:
    """Fitted per-step ratio of a run of successive differences."""
    pos = d[d > 0]
    if len(pos) < 2:
        return 0.0
    idx = np.nonzero(d > 0)[0].astype(float)
    slope = np.polyfit(idx, np.log(pos), 1)[0]
    return float(math.exp(slope))


def reconstruct_transfer(phi: Cocycle, anchor: BackwardOrbit, y0: float, fmap: PiecewiseMap,
                         tol: float = 1e-8, window: int = 10, ratio_max: float = 0.95,
                         strict: bool = True) -> ReconstructionResult:
    """Psi(y0) = lim phi_n(y_n) phi_n(x_n)^-1 along the anchor's branch word.

    Psi_{n+1} = A_n phi(y_{n+1}) phi(x_{n+1})^-1 A_n^-1 Psi_n with
    A_n = phi_n(y_n); the step size is recorded together with the bound
    ||Ad(A_n)|| d(phi(y_{n+1}), phi(x_{n+1})).
    Stops once a step is below ``tol`` and the last ``window`` steps decay at
    a fitted ratio below ``ratio_max``.
    """
    e = phi.identity()
    A = e
    psi = e
    y = float(y0)
    diffs, bounds = [], []
    br = fmap.branches
    xs, labels = anchor.points, anchor.labels
    done = False
    for n, k in enumerate(labels):
        b = br[int(k)]
        lo, hi = b.image
        if not (lo - 1e-12 <= y <= hi + 1e-12):
            raise BranchWordMismatch(f"y_{n} = {y!r} is outside the image of branch {int(k)}")
        y = float(b.inverse(min(max(y, lo), hi)))
        x = xs[n + 1]
        py, px = phi(y), phi(x)
        g = multiply(py, inverse(px))
        step = conjugate(A, g)
        new = multiply(step, psi)
        diffs.append(distance(new, psi))
        bounds.append(ad_norm(A) * distance(py, px))
        psi = new
        A = multiply(A, py)
        d = diffs[-1]
        if d == 0.0 and bounds[-1] == 0.0:
            done = True
            break
        if d < tol and len(diffs) >= window:
            if _geometric_ratio(np.array(diffs[-window:])) < ratio_max:
                done = True
                break
    diffs = np.array(diffs)
    bounds = np.array(bounds)
    rate = _geometric_ratio(diffs)
    if not done and strict:
        raise ReconstructionError(
            f"PH violated or singular orbit: no geometric convergence after {len(diffs)} steps "
            f"(last step {diffs[-1] if len(diffs) else math.nan:.3g}, ratio {rate:.3g})"
        )
    return ReconstructionResult(psi, len(diffs), diffs, bounds, rate, done)


@dataclass
class GridFunction:
    """psi-hat sampled on a sorted grid, with chart interpolation in between."""

    points: np.ndarray
    values: list
    flags: dict = field(default_factory=dict)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        order = np.argsort(self.points)
        self.points = self.points[order]
        self.values = [self.values[i] for i in order]

    def __call__(self, x: float, snap: float = 1e-12) -> GroupElement:
        p = self.points
        k = int(np.searchsorted(p, x))
        if k < len(p) and abs(p[k] - x) <= snap:
            return self.values[k]
        if k > 0 and abs(p[k - 1] - x) <= snap:
            return self.values[k - 1]
        if k == 0 or k == len(p):
            raise ValueError(f"{x!r} outside the grid")
        t = (x - p[k - 1]) / (p[k] - p[k - 1])
        return interpolate(self.values[k - 1], self.values[k], t)

    def covers(self, x: float, snap: float = 1e-12) -> bool:
        return self.points[0] - snap <= x <= self.points[-1] + snap

    def charts(self) -> np.ndarray:
        return np.array([np.atleast_1d(v.chart()) for v in self.values])

    def to_csv(self, path) -> None:
        ch = self.charts()
        write_csv(path, ["x"] + [f"psi_{i + 1}" for i in range(ch.shape[1])],
                  ([float(x)] + [float(np.real(v)) for v in row] for x, row in zip(self.points, ch)))


def reconstruct_coboundary_on_grid(phi: Cocycle, fmap: PiecewiseMap, reference: float,
                                   grid: Sequence[float], tol: float = 1e-10, seed: int = 0,
                                   anchor_length: int = 200, consistent: Optional[bool] = None,
                                   results: Optional[list] = None) -> GridFunction:
    """psi on a grid with psi(reference) = e, via one shared anchor orbit at the reference.

    Grid points that cannot follow the anchor's branch word are reached
    through psi(y) = phi(y)^-1 psi(f y) when f y can.
    """
    anchor = sample_backward_orbit(fmap, reference, anchor_length, seed=seed)
    e = phi.identity()
    vals = []
    for y in grid:
        try:
            r = reconstruct_transfer(phi, anchor, float(y), fmap, tol=tol)
            v = r.value
        except BranchWordMismatch:
            fy = float(fmap(float(y)))
            r = reconstruct_transfer(phi, anchor, fy, fmap, tol=tol)
            v = multiply(inverse(phi(float(y))), r.value)
        if results is not None:
            results.append(r)
        vals.append(v)
    flags = {"anchor_seed": seed}
    if consistent is False:
        flags["obstructed"] = True
    return GridFunction(np.asarray(grid, dtype=float), vals, flags)


def coboundary_residual(phi: Cocycle, psi: GridFunction, fmap: PiecewiseMap) -> float:
    """sup over grid x of d(psi(T x), phi(x) psi(x)); images off the grid are interpolated."""
    worst = 0.0
    for x, v in zip(psi.points, psi.values):
        tx = float(fmap(float(x)))
        if not psi.covers(tx):
            continue
        worst = max(worst, distance(psi(tx), multiply(phi(float(x)), v)))
    return worst


def twisted_residual(phi: Cocycle, twist, psi: GridFunction, fmap: PiecewiseMap) -> float:
    """sup d(psi(T x), e^{i alpha} chi(phi(x)) psi(x)) for a circle-valued psi."""
    from ..groups import Circle

    worst = 0.0
    for x, v in zip(psi.points, psi.values):
        tx = float(fmap(float(x)))
        if not psi.covers(tx):
            continue
        rhs = Circle(twist.phase + twist.character(phi(float(x))).angle + v.angle)
        worst = max(worst, distance(psi(tx), rhs))
    return worst
