"""Canonical Markov extension (Hofbauer tower) of a piecewise monotone map."""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .. import kernels
from ..io import write_text
from ..dynamics.maps import PiecewiseMap

__all__ = ["HofbauerTower", "hofbauer_build", "IDENT_TOL"]

IDENT_TOL = 1e-9


@dataclass
class HofbauerTower:
    """Levels are intervals; level 0 is the base copy of the phase space.

    ``transitions[i][k]`` is the level reached from level i through base
    cell k, -1 when level i misses cell k or the target lies beyond the
    built depth.
    """

    fmap: PiecewiseMap
    levels: list
    level_depth: list
    transitions: np.ndarray
    depth: int
    lifted_mass: np.ndarray = field(default=None, repr=False)
    overflow: float = 0.0
    stationarity_defect: float = math.nan

    @property
    def n_levels(self) -> int:
        return len(self.levels)

    def edges(self):
        for i, row in enumerate(self.transitions):
            for k, j in enumerate(row):
                if j >= 0:
                    yield i, k, int(j)

    def to_edge_list(self) -> str:
        return "".join(f"{i} {k} {j}\n" for i, k, j in self.edges())

    def write_edge_list(self, path) -> None:
        write_text(path, self.to_edge_list())


def _image(fmap: PiecewiseMap, k: int, a: float, b: float):
    br = fmap.branches[k]
    u, v = float(br.forward(a)), float(br.forward(b))
    return (min(u, v), max(u, v))


def _find(levels, iv, start=1):
    for j in range(start, len(levels)):
        L = levels[j]
        if abs(L[0] - iv[0]) <= IDENT_TOL and abs(L[1] - iv[1]) <= IDENT_TOL:
            return j
    return -1


def hofbauer_build(fmap: PiecewiseMap, depth: int, occupation_steps: int = 1_000_000,
                   seed: int = 0, lift: bool = True) -> HofbauerTower:
    """Breadth-first construction of levels D = closure T(D' cap P) up to ``depth``.

    With ``lift`` the invariant measure is lifted by pushing an orbit
    through the tower and recording the occupation of each level; the
    stationarity defect compares the first half of the orbit with the whole.
    """
    if not 1 <= depth <= 24:
        raise ValueError("depth must be in 1..24")
    ncell = fmap.n_branches
    levels = [fmap.interval]
    level_depth = [0]
    trans = []
    queue = deque([0])
    while queue:
        i = queue.popleft()
        D = levels[i]
        row = [-1] * ncell
        for k, br in enumerate(fmap.branches):
            a, b = max(D[0], br.domain[0]), min(D[1], br.domain[1])
            if b - a <= IDENT_TOL:
                continue
            img = _image(fmap, k, a, b)
            j = _find(levels, img)
            if j < 0:
                if level_depth[i] + 1 > depth:
                    continue
                levels.append(img)
                level_depth.append(level_depth[i] + 1)
                queue.append(len(levels) - 1)
                j = len(levels) - 1
            row[k] = j
        trans.append(row)
    table = np.array(trans, dtype=np.int64)
    tower = HofbauerTower(fmap, levels, level_depth, table, depth)
    if lift and fmap.kernel is not None:
        _lift_measure(tower, occupation_steps, seed)
    return tower


def _lift_measure(tower: HofbauerTower, steps: int, seed: int) -> None:
    fmap = tower.fmap
    kind, p = fmap.kernel
    rng = np.random.default_rng(seed)
    lo, hi = fmap.interval
    x0 = lo + (hi - lo) * (0.05 + 0.9 * rng.random())
    breaks = np.ascontiguousarray(fmap.breakpoints[1:-1], dtype=float)
    table = np.ascontiguousarray(tower.transitions)
    half, over_h = kernels.hofbauer_occupation(kind, p, table, breaks, 0, x0, steps // 2)
    full, over = kernels.hofbauer_occupation(kind, p, table, breaks, 0, x0, steps)
    m_half = half / half.sum()
    m_full = full / full.sum()
    tower.lifted_mass = m_full
    tower.overflow = over / steps
    big = m_full > 0.01
    tower.stationarity_defect = float(np.max(np.abs(m_half[big] - m_full[big]) / m_full[big])) if np.any(big) else 0.0
