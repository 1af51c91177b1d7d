"""Periodic-orbit obstructions: a coboundary has trivial products over every cycle."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..dynamics.maps import PiecewiseMap
from ..dynamics.orbits import periodic_points
from ..io import write_csv
from ..groups import cocycle_product, distance
from .cocycle import Cocycle

__all__ = ["OrbitResidual", "ObstructionReport", "periodic_obstruction"]


@dataclass(frozen=True)
class OrbitResidual:
    period: int
    representative: float
    residual: float
    points: tuple = field(repr=False, default=())


@dataclass
class ObstructionReport:
    rows: list
    max_residual: float
    tolerance: float
    excluded: int = 0

    @property
    def verdict(self) -> str:
        return "coboundary-consistent" if self.max_residual < self.tolerance else "obstructed"

    @property
    def consistent(self) -> bool:
        return self.verdict == "coboundary-consistent"

    def max_up_to(self, period: int) -> float:
        vals = [r.residual for r in self.rows if r.period <= period]
        return max(vals) if vals else 0.0

    def to_csv(self, path) -> None:
        write_csv(path, ["period", "representative", "residual"],
                  ((r.period, float(r.representative), float(r.residual)) for r in self.rows))


def periodic_obstruction(phi: Cocycle, fmap: PiecewiseMap, max_period: int, tol: float = 1e-8,
                         interior_only: bool = True) -> ObstructionReport:
    """d(phi_n(p), e) for every periodic orbit of prime period n <= max_period.

    ``interior_only`` drops orbits through the endpoints of the phase
    interval, where boundary fixed points carry a different multiplier.
    """
    if not 1 <= max_period <= 12:
        raise ValueError("max_period must be in 1..12")
    lo, hi = fmap.interval
    rows = []
    excluded = 0
    for n in range(1, max_period + 1):
        for orb in periodic_points(fmap, n):
            if interior_only and any(abs(p - lo) < 1e-12 or abs(p - hi) < 1e-12 for p in orb.points):
                excluded += 1
                continue
            g = cocycle_product(phi, orb.points)
            rows.append(OrbitResidual(n, orb.representative, distance(g, phi.identity()), orb.points))
    worst = max((r.residual for r in rows), default=0.0)
    return ObstructionReport(rows, float(worst), tol, excluded)
