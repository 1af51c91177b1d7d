"""Young towers built from first-return maps to a base interval."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from numpy.polynomial import legendre as L

from ..dynamics.maps import Branch, Density, PiecewiseMap
from ..dynamics.orbits import lyapunov_exponent, mean_log_derivative
from ..io import write_csv

__all__ = [
    "Cell",
    "TailRecord",
    "YoungTower",
    "KacReport",
    "PullBackResult",
    "TowerError",
    "induce_first_return",
    "kac_and_lambda",
    "pull_back_measure",
    "tower_metric_distance",
    "tower_step",
    "tower_projection",
]

NODES = 40
MAX_PENDING = 200_000


class TowerError(RuntimeError):
    pass


@dataclass
class _Piece:
    """An interval J with T^m J = Y, carrying the pulled-back quadrature nodes."""

    interval: tuple[float, float]
    level: int
    nodes: np.ndarray
    logd: np.ndarray
    parent: int
    branch: int


@dataclass(frozen=True)
class Cell:
    index: int
    interval: tuple[float, float]
    R: int
    word: tuple
    mass: float

    @property
    def width(self):
        return self.interval[1] - self.interval[0]


@dataclass(frozen=True)
class TailRecord:
    """Cells with R > maxR lumped together."""

    max_R: int
    mass: float
    model: str
    exponent: float
    fit_range: tuple[int, int]


class YoungTower:
    """Induced full-return system over a base Y.

    ``survival[n]`` is mu_Y(R > n) for n = 0..maxR with mu_Y the normalised
    invariant measure of the induced map.
    """

    def __init__(self, base_map, base, cells, induced, density, tail, survival, kac_sum,
                 kac_infinite, lambda0, pieces, metric="rho2"):
        self.base_map = base_map
        self.base = base
        self.cells = cells
        self.induced = induced
        self.density = density
        self.tail = tail
        self.survival = survival
        self.kac_sum = kac_sum
        self.kac_infinite = kac_infinite
        self.lambda0 = lambda0
        self._pieces = pieces
        self.metric = metric
        self._lefts = np.array([c.interval[0] for c in cells])

    def __repr__(self):
        return (f"YoungTower({self.base_map.name}, Y={self.base}, cells={len(self.cells)}, "
                f"R={self.kac_sum:.6g}, tail={self.tail.mass:.3g})")

    def with_metric(self, metric: str) -> "YoungTower":
        if metric not in ("rho1", "rho2"):
            raise ValueError("metric must be 'rho1' or 'rho2'")
        t = YoungTower(self.base_map, self.base, self.cells, self.induced, self.density, self.tail,
                       self.survival, self.kac_sum, self.kac_infinite, self.lambda0, self._pieces,
                       metric)
        return t

    def cell_of(self, x: float) -> Cell:
        k = int(np.searchsorted(self._lefts, x, side="right")) - 1
        if k >= 0:
            c = self.cells[k]
            if c.interval[0] <= x <= c.interval[1]:
                return c
        raise ValueError(f"{x!r} is not in an enumerated cell")

    def return_time_pmf(self, n_max: int) -> np.ndarray:
        """mu_Y(R = n) for n = 1..n_max."""
        s = self.survival
        return np.array([s[n - 1] - s[n] for n in range(1, min(n_max, len(s) - 1) + 1)])

    def mu_Y(self, a: float, b: float) -> float:
        return self.density.measure(max(a, self.base[0]), min(b, self.base[1]))

    def to_csv(self, path) -> None:
        write_csv(path, ["cellIndex", "left", "right", "R", "mass"],
                  ((c.index, float(c.interval[0]), float(c.interval[1]), c.R, float(c.mass))
                   for c in self.cells))


def _legendre_density(base, coef) -> Density:
    lo, hi = base
    half = 0.5 * (hi - lo)
    icoef = L.legint(coef, lbnd=-1.0) * half

    def t(x):
        return (np.asarray(x, dtype=float) - lo) / half - 1.0

    def pdf(x):
        v = L.legval(np.clip(t(x), -1.0, 1.0), coef)
        inside = (np.asarray(x) >= lo) & (np.asarray(x) <= hi)
        return np.where(inside, v, 0.0)

    def cdf(x):
        return L.legval(np.clip(t(x), -1.0, 1.0), icoef)

    return Density(pdf, cdf, name="induced", analytic=False, support=base)


def _compose(fmap, word):
    br = fmap.branches

    def fwd(x):
        for k in word:
            x = br[k].forward(x)
        return x

    def der(x):
        acc = 1.0
        for k in word:
            acc = acc * br[k].derivative(x)
            x = br[k].forward(x)
        return acc

    def inv(y):
        for k in reversed(word):
            lo, hi = br[k].image
            y = br[k].inverse(np.clip(y, lo, hi))
        return y

    return fwd, der, inv


def _fit_tail(ns, surv):
    """Decide geometric versus power-law decay of the survival function."""
    keep = surv > 0
    ns, surv = ns[keep], surv[keep]
    if len(ns) < 3:
        return "geometric", math.inf
    ly = np.log(surv)
    A_geo = np.column_stack([np.ones_like(ns), ns])
    A_pow = np.column_stack([np.ones_like(ns), np.log(ns)])
    cg, rg, *_ = np.linalg.lstsq(A_geo, ly, rcond=None)
    cp, rp, *_ = np.linalg.lstsq(A_pow, ly, rcond=None)
    rg = float(rg[0]) if len(rg) else 0.0
    rp = float(rp[0]) if len(rp) else 0.0
    if rg <= rp:
        return "geometric", float(-cg[1])
    return "power", float(-cp[1])


def induce_first_return(fmap: PiecewiseMap, Y: tuple[float, float], maxR: int,
                        nodes: int = NODES, pf_tol: float = 1e-13, pf_iter: int = 500,
                        tail_fit: Optional[tuple[int, int]] = None,
                        max_tail: float = 0.2, extrapolate: bool = True) -> YoungTower:
    """First-return tower over Y.

    Cells are found by pulling Y back branch by branch; intervals outside Y
    are pulled back again until they land in Y or depth maxR is reached.  The
    induced invariant density is the fixed point of the induced transfer
    operator, discretised by Legendre interpolation on Y.
    """
    lo, hi = float(Y[0]), float(Y[1])
    if not hi > lo:
        raise ValueError("base must have positive length")
    t, wts = L.leggauss(nodes)
    half = 0.5 * (hi - lo)
    u = lo + half * (t + 1.0)
    wts = wts * half
    br = fmap.branches
    tol = 1e-12

    pieces = [_Piece((lo, hi), 0, u.copy(), np.zeros(nodes), -1, -1)]
    frontier = [0]
    raw_cells = []
    for level in range(maxR):
        nxt = []
        for pid in frontier:
            J = pieces[pid]
            for k, b in enumerate(br):
                ilo, ihi = b.image
                a, c = max(J.interval[0], ilo), min(J.interval[1], ihi)
                if c - a <= tol:
                    continue
                e1, e2 = float(b.inverse(a)), float(b.inverse(c))
                K = (min(e1, e2), max(e1, e2))
                V = np.full(nodes, np.nan)
                okn = np.isfinite(J.nodes) & (J.nodes >= ilo) & (J.nodes <= ihi)
                V[okn] = b.inverse(J.nodes[okn])
                D = np.full(nodes, np.nan)
                D[okn] = J.logd[okn] + np.log(np.abs(b.derivative(V[okn])))
                inY = (V >= lo - tol) & (V <= hi + tol)
                in_part = (max(K[0], lo), min(K[1], hi))
                if in_part[1] - in_part[0] > tol:
                    raw_cells.append((in_part, level + 1, pid, k, np.where(inY, V, np.nan),
                                      np.where(inY, D, np.nan)))
                outs = []
                if K[0] < lo - tol:
                    outs.append((K[0], min(K[1], lo)))
                if K[1] > hi + tol:
                    outs.append((max(K[0], hi), K[1]))
                for o in outs:
                    m = (V >= o[0] - tol) & (V <= o[1] + tol) & ~inY
                    pieces.append(_Piece(o, level + 1, np.where(m, V, np.nan),
                                         np.where(m, D, np.nan), pid, k))
                    nxt.append(len(pieces) - 1)
        if len(pieces) > MAX_PENDING:
            raise TowerError("too many pending intervals; the map is not suited to first-return induction")
        frontier = nxt
        if not frontier:
            break

    if not raw_cells:
        raise TowerError("no returns to the base")

    # induced transfer operator fixed point
    Vs = np.array([c[4] for c in raw_cells])
    Ds = np.array([c[5] for c in raw_cells])
    valid = np.isfinite(Vs)
    Tv = np.where(valid, (Vs - lo) / half - 1.0, 0.0)
    Wt = np.where(valid, np.exp(-np.where(valid, Ds, 0.0)), 0.0)
    vals = np.full(nodes, 1.0 / (hi - lo))
    for _ in range(pf_iter):
        coef = L.legfit(t, vals, nodes - 1)
        new = np.sum(L.legval(np.clip(Tv, -1, 1), coef) * Wt, axis=0)
        new /= np.sum(new * wts)
        done = np.max(np.abs(new - vals)) < pf_tol * np.max(np.abs(new))
        vals = new
        if done:
            break
    coef = L.legfit(t, vals, nodes - 1)
    contrib = L.legval(np.clip(Tv, -1, 1), coef) * Wt
    masses = contrib @ wts

    def word_of(pid):
        w = []
        while pid > 0:
            w.append(pieces[pid].branch)
            pid = pieces[pid].parent
        return tuple(w)

    order = np.argsort([c[0][0] for c in raw_cells])
    cell_nodes = Vs[order]
    cell_logd = Ds[order]
    cell_parent = np.array([raw_cells[j][2] for j in order])
    cells = []
    branches = []
    for idx, j in enumerate(order):
        iv, R, pid, k, _, _ = raw_cells[j]
        word = (k,) + word_of(pid)
        cells.append(Cell(idx, iv, R, word, float(masses[j])))
        fwd, der, inv = _compose(fmap, word)
        flips = sum(1 for w in word if not br[w].increasing)
        branches.append(Branch(iv, fwd, der, inv, (lo, hi), flips % 2 == 0))

    total = float(masses.sum())
    tail_mass = max(0.0, 1.0 - total)
    if tail_mass > max_tail:
        raise TowerError(f"tail mass {tail_mass:.3g} exceeds {max_tail:.0%}; increase maxR")

    Rs = np.array([c.R for c in cells])
    ms = np.array([c.mass for c in cells])
    top = int(Rs.max())
    pmf = np.bincount(Rs, weights=ms, minlength=top + 1)
    surv = np.empty(top + 1)
    surv[0] = 1.0
    for n in range(1, top + 1):
        surv[n] = surv[n - 1] - pmf[n]
    surv = np.maximum(surv, 0.0)
    if tail_fit is None:
        tail_fit = (max(1, top // 10), top)
    a, b = tail_fit
    ns = np.arange(a, b + 1, dtype=float)
    model, expo = _fit_tail(ns, surv[a:b + 1])

    partial = float(surv[:top].sum())
    infinite = False
    if not extrapolate or surv[top] == 0:
        kac = partial + (top * 0 if surv[top] == 0 else 0.0)
    elif model == "geometric":
        q = math.exp(-expo) if math.isfinite(expo) else 0.0
        kac = partial + surv[top] / (1.0 - q) if q < 1 else math.inf
        infinite = not math.isfinite(kac)
    else:
        if expo <= 1.05:
            infinite = True
            kac = math.inf
        else:
            kac = partial + surv[top] * (top / (expo - 1.0) + 0.5)

    vmask = np.isfinite(Ds)
    lam0 = float(np.exp(Ds[vmask].min())) if np.any(vmask) else math.nan

    dens = _legendre_density((lo, hi), coef)
    induced = PiecewiseMap(f"induced({fmap.name})", (lo, hi), branches, params={"Y": [lo, hi]},
                           density=dens)
    tail = TailRecord(maxR, tail_mass, model, expo, (a, b))
    tower = YoungTower(fmap, (lo, hi), cells, induced, dens, tail, surv, float(kac), infinite,
                       lam0, pieces)
    tower._cell_nodes, tower._cell_logd, tower._cell_parent = cell_nodes, cell_logd, cell_parent
    return tower


@dataclass(frozen=True)
class KacReport:
    R: float
    lambda0: float
    lambda_tower: float
    lambda_birkhoff: float
    log_lambda_birkhoff: float
    infinite: bool
    consistent: bool


def kac_and_lambda(tower: YoungTower, tol: float = 1e-3, N: int = 1_000_000, seed: int = 0) -> KacReport:
    """Kac sum, lambda_0^(1/R) and the Birkhoff rate of the original map."""
    if tower.kac_infinite:
        return KacReport(math.inf, tower.lambda0, math.nan, math.nan, math.nan, True, False)
    if tower.tail.mass >= 0.05:
        raise TowerError(f"tail mass {tower.tail.mass:.3g} too large for a Kac estimate")
    lyap, _ = mean_log_derivative(tower.base_map, N=N, seed=seed)
    lam = math.exp(lyap)
    lt = tower.lambda0 ** (1.0 / tower.kac_sum)
    return KacReport(tower.kac_sum, tower.lambda0, lt, lam, lyap, False, lam >= lt - tol)


@dataclass(frozen=True)
class PullBackResult:
    value: float
    invariance_defect: float
    sigma_finite: bool


def _piece_forward(tower: YoungTower, pid: int, x: np.ndarray) -> np.ndarray:
    br = tower.base_map.branches
    pieces = tower._pieces
    while pid > 0:
        x = br[pieces[pid].branch].forward(x)
        pid = pieces[pid].parent
    return x


def pull_back_measure(tower: YoungTower, A: Sequence[tuple[float, float]] | tuple[float, float],
                      check_invariance: bool = True) -> PullBackResult:
    """nu(A) = sum_j sum_{i<R_j} mu_Y(T^-i A cap Lambda_j), normalised to nu(whole) = 1.

    ``A`` is an interval or a list of disjoint intervals.
    """
    ivs = [tuple(A)] if np.ndim(A) == 1 else [tuple(a) for a in A]
    val = _nu(tower, ivs)
    if tower.kac_infinite:
        return PullBackResult(val * tower.kac_sum if math.isfinite(tower.kac_sum) else val, math.nan,
                              True)
    defect = math.nan
    if check_invariance:
        pre = []
        for a, b in ivs:
            for br in tower.base_map.branches:
                ilo, ihi = br.image
                lo_, hi_ = max(a, ilo), min(b, ihi)
                if hi_ > lo_:
                    u, v = float(br.inverse(lo_)), float(br.inverse(hi_))
                    pre.append((min(u, v), max(u, v)))
        defect = abs(val - _nu(tower, pre))
    return PullBackResult(val, defect, False)


def _piece_image_density(tower: YoungTower):
    """Per piece: Legendre coefficients of the density pushed onto it, in its T^m coordinate."""
    cache = getattr(tower, "_piece_dens", None)
    if cache is not None:
        return cache
    pieces = tower._pieces
    lo, hi = tower.base
    nodes = len(pieces[0].nodes)
    t, wts = L.leggauss(nodes)
    half = 0.5 * (hi - lo)
    dens = tower.density
    W = np.zeros((len(pieces), nodes))
    # a cell below piece J contributes h_Y(F^-1 u) / |F'| in J's coordinate u
    x = tower._cell_nodes
    w = np.where(np.isfinite(x), dens(np.nan_to_num(x)) * np.exp(-np.nan_to_num(tower._cell_logd)), 0.0)
    for ci, pid in enumerate(tower._cell_parent):
        while pid > 0:
            W[pid] += w[ci]
            pid = pieces[pid].parent
    coefs = [L.legfit(t, W[i], nodes - 1) for i in range(len(pieces))]
    tower._piece_dens = (coefs, t, wts * half)
    return tower._piece_dens


def _nu(tower: YoungTower, ivs) -> float:
    coefs, t, _ = _piece_image_density(tower)
    lo, hi = tower.base
    half = 0.5 * (hi - lo)
    total = 0.0
    for a, b in ivs:
        a2, b2 = max(a, lo), min(b, hi)
        if b2 > a2:
            total += tower.density.measure(a2, b2)
    pieces = tower._pieces
    for pid in range(1, len(pieces)):
        p = pieces[pid]
        for a, b in ivs:
            a2, b2 = max(a, p.interval[0]), min(b, p.interval[1])
            if b2 <= a2:
                continue
            ends = np.asarray(_piece_forward(tower, pid, np.array([a2, b2])), dtype=float)
            u1, u2 = np.sort(ends)
            ic = L.legint(coefs[pid], lbnd=-1.0) * half
            s = L.legval(np.clip((u2 - lo) / half - 1, -1, 1), ic) - L.legval(
                np.clip((u1 - lo) / half - 1, -1, 1), ic)
            total += float(s)
    return total / _raw_mass(tower)


def _raw_mass(tower: YoungTower) -> float:
    """nu of the whole space before normalisation (the truncated Kac sum)."""
    coefs, t, wts = _piece_image_density(tower)
    lo, hi = tower.base
    half = 0.5 * (hi - lo)
    s = 1.0
    for c in coefs[1:]:
        ic = L.legint(c, lbnd=-1.0) * half
        s += float(L.legval(1.0, ic))
    return s


def tower_projection(tower: YoungTower, point: tuple[float, int]) -> float:
    """pi(x, i) = T^i(x)."""
    x, i = point
    c = tower.cell_of(x)
    if not 0 <= i < c.R:
        raise ValueError(f"level {i} invalid for a cell with return time {c.R}")
    br = tower.base_map.branches
    for k in c.word[:i]:
        x = float(br[k].forward(x))
    return x


def tower_step(tower: YoungTower, point: tuple[float, int]) -> tuple[float, int]:
    """Tower map: climb one level, or return to the base through F."""
    x, i = point
    c = tower.cell_of(x)
    if not 0 <= i < c.R:
        raise ValueError(f"level {i} invalid for a cell with return time {c.R}")
    if i + 1 < c.R:
        return (x, i + 1)
    return (float(tower.induced.branches[c.index].forward(x)), 0)


def tower_metric_distance(tower: YoungTower, p: tuple[float, int], q: tuple[float, int]) -> float:
    """rho_1 or rho_2 between tower points (x, i), (x~, i~)."""
    (x, i), (y, j) = p, q
    cx, cy = tower.cell_of(x), tower.cell_of(y)
    for c, lvl in ((cx, i), (cy, j)):
        if not 0 <= lvl < c.R:
            raise ValueError(f"level {lvl} invalid for a cell with return time {c.R}")
    if cx.index != cy.index or i != j:
        return 1.0
    if tower.metric == "rho2":
        return abs(x - y)
    return abs(tower_projection(tower, p) - tower_projection(tower, q))
