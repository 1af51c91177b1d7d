"""Cylinders, backward orbits, distortion, Lyapunov exponents and periodic points."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import integrate, optimize

from .. import kernels
from .maps import DensityUnavailableError, PiecewiseMap

__all__ = [
    "BoundaryOrbitError",
    "CriticalCylinderError",
    "OrbitEscapeError",
    "CylinderSet",
    "BackwardOrbit",
    "PeriodicOrbit",
    "ContractionReport",
    "cylinder",
    "word_cylinder",
    "sample_backward_orbit",
    "sample_backward_batch",
    "pull_back",
    "backward_cylinder_widths",
    "distortion_ratio",
    "jacobian_distortion_bound",
    "lyapunov_exponent",
    "mean_log_derivative",
    "periodic_points",
    "contraction_check",
]

BOUNDARY_TOL = 1e-14
LINEAR_REGIME = 1e-7


class BoundaryOrbitError(ValueError):
    pass


class CriticalCylinderError(ValueError):
    pass


class OrbitEscapeError(RuntimeError):
    pass


@dataclass(frozen=True)
class CylinderSet:
    depth: int
    word: tuple
    interval: tuple[float, float]

    @property
    def width(self) -> float:
        return self.interval[1] - self.interval[0]

    def __contains__(self, x) -> bool:
        return self.interval[0] <= x <= self.interval[1]


def _interior_breaks(fmap: PiecewiseMap) -> np.ndarray:
    return np.array(fmap.breakpoints[1:-1])


def word_cylinder(fmap: PiecewiseMap, word: Sequence[int]) -> Optional[tuple[float, float]]:
    """Points whose first len(word) branch labels are ``word``; None if empty."""
    br = fmap.branches
    lo, hi = br[word[-1]].domain
    for b in reversed(word[:-1]):
        ilo, ihi = br[b].image
        lo, hi = max(lo, ilo), min(hi, ihi)
        if hi <= lo:
            return None
        u, v = float(br[b].inverse(lo)), float(br[b].inverse(hi))
        lo, hi = (u, v) if u <= v else (v, u)
    return lo, hi


def cylinder(fmap: PiecewiseMap, x: float, n: int) -> CylinderSet:
    """The depth-n cylinder P_n[x] (n = 0 gives the branch domain of x)."""
    if n < 0:
        raise ValueError("depth must be non-negative")
    breaks = _interior_breaks(fmap)
    word = []
    y = float(x)
    for i in range(max(n, 1)):
        if breaks.size and np.min(np.abs(breaks - y)) <= BOUNDARY_TOL:
            raise BoundaryOrbitError(f"orbit of {x!r} hits a partition boundary at step {i}")
        k = fmap.branch_index(y)
        word.append(k)
        y = float(fmap.branches[k].forward(y))
    if n == 0:
        return CylinderSet(0, (word[0],), fmap.branches[word[0]].domain)
    iv = word_cylinder(fmap, word)
    return CylinderSet(n, tuple(word), iv)


# ---------------------------------------------------------------- backward orbits

@dataclass
class BackwardOrbit:
    """x_0, x_1, ..., x_N with f(x_{i+1}) = x_i; ``labels[i]`` is the branch of x_{i+1}.

    ``log_widths[n-1]`` is log diam P_n[x_n].
    """

    points: np.ndarray
    labels: np.ndarray
    log_widths: np.ndarray = field(repr=False)
    K_hat: float = math.nan
    C_hat: float = math.nan
    lambda_hat: float = math.nan

    def __len__(self):
        return len(self.points) - 1

    @property
    def widths(self) -> np.ndarray:
        return np.exp(self.log_widths)

    def check(self, fmap: PiecewiseMap, tol: float = 1e-10) -> float:
        """Largest |f(x_{i+1}) - x_i|; raises if a label disagrees with its point."""
        worst = 0.0
        for i, k in enumerate(self.labels):
            b = fmap.branches[int(k)]
            y = self.points[i + 1]
            if not (b.domain[0] - tol <= y <= b.domain[1] + tol):
                raise ValueError(f"x_{i + 1} = {y!r} is not in branch {k}")
            worst = max(worst, abs(float(b.forward(y)) - self.points[i]))
        return worst


def _branch_weights(fmap: PiecewiseMap, x: np.ndarray):
    """Preimages of each x under every branch and their natural-extension weights."""
    dens = fmap.require_density()
    nb = fmap.n_branches
    ys = np.full((nb, x.size), np.nan)
    w = np.zeros((nb, x.size))
    hx = np.asarray(dens(x), dtype=float)
    for k, b in enumerate(fmap.branches):
        lo, hi = b.image
        m = (x >= lo - 1e-13) & (x <= hi + 1e-13)
        if not np.any(m):
            continue
        y = np.asarray(b.inverse(np.clip(x[m], lo, hi)), dtype=float)
        ys[k, m] = y
        with np.errstate(divide="ignore", invalid="ignore"):
            w[k, m] = np.asarray(dens(y), dtype=float) / (hx[m] * np.abs(b.derivative(y)))
    inf = ~np.isfinite(w)
    w[np.isnan(w)] = 0.0
    rows = inf.any(axis=0)
    if np.any(rows):
        w[:, rows] = inf[:, rows].astype(float)
    tot = w.sum(axis=0)
    if np.any(tot <= 0):
        raise ValueError("point without admissible preimage")
    return ys, w / tot


def sample_backward_batch(fmap: PiecewiseMap, x0, N: int, rng: np.random.Generator):
    """Vectorised natural-extension sampling of many orbits; returns (points, labels)."""
    x = np.atleast_1d(np.asarray(x0, dtype=float)).copy()
    pts = np.empty((N + 1, x.size))
    labs = np.empty((N, x.size), dtype=np.int64)
    pts[0] = x
    cols = np.arange(x.size)
    for i in range(N):
        ys, w = _branch_weights(fmap, x)
        c = np.cumsum(w, axis=0)
        u = rng.random(x.size)
        k = np.minimum((u[None, :] >= c).sum(axis=0), fmap.n_branches - 1)
        while np.any(w[k, cols] == 0):
            bad = w[k, cols] == 0
            k[bad] -= 1
        x = ys[k, cols]
        pts[i + 1] = x
        labs[i] = k
    return pts, labs


def sample_backward_orbit(fmap: PiecewiseMap, x0: float, N: int, seed=0) -> BackwardOrbit:
    """Backward orbit drawn from the natural extension conditioned on x_0.

    Each preimage y of x is chosen with probability h(y) / (h(x) |f'(y)|).
    """
    if fmap.density is None:
        raise DensityUnavailableError(
            f"{fmap.name} has no invariant density; run estimate_density(map) first"
        )
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    pts, labs = sample_backward_batch(fmap, x0, N, rng)
    return make_backward_orbit(fmap, pts[:, 0], labs[:, 0])


def pull_back(fmap: PiecewiseMap, y0, labels: Sequence[int]) -> np.ndarray:
    """y_{i+1} = inverse branch labels[i] of y_i, vectorised over y0."""
    y = np.asarray(y0, dtype=float)
    out = [y]
    for k in labels:
        b = fmap.branches[int(k)]
        lo, hi = b.image
        if np.any((y < lo - 1e-12) | (y > hi + 1e-12)):
            raise ValueError(f"point leaves the image of branch {int(k)}")
        y = np.asarray(b.inverse(np.clip(y, lo, hi)), dtype=float)
        out.append(y)
    return np.array(out)


def backward_cylinder_widths(fmap: PiecewiseMap, points, labels) -> np.ndarray:
    """log diam P_n[x_n] for n = 1..N along a backward orbit.

    Endpoints are tracked as offsets from x_n so widths far below machine
    epsilon relative to |x_n| stay accurate; once small, a step is linearised.
    """
    points = np.asarray(points, dtype=float)
    labels = np.asarray(labels)
    N = len(labels)
    out = np.empty(N)
    br = fmap.branches
    d_lo, d_hi = br[int(labels[0])].domain
    x = points[1]
    a, b = d_lo - x, d_hi - x
    logw = math.log(b - a)
    fa, fb = a / (b - a), b / (b - a)
    linear = False
    out[0] = logw
    for i in range(1, N):
        k = int(labels[i])
        branch = br[k]
        xi, xn = points[i], points[i + 1]
        ilo, ihi = branch.image
        w = math.exp(logw)
        a, b = fa * w, fb * w
        if a < ilo - xi or b > ihi - xi:
            a, b = max(a, ilo - xi), min(b, ihi - xi)
            logw = math.log(b - a)
            fa, fb = a / (b - a), b / (b - a)
            linear = False
        d = float(branch.derivative(xn))
        if not linear and max(-a, b) < LINEAR_REGIME * min(1.0, d * d):
            linear = True
        if linear:
            logw -= math.log(abs(d))
            if d < 0:
                fa, fb = -fb, -fa
        else:
            u = float(branch.inverse(min(max(xi + a, ilo), ihi))) - xn
            v = float(branch.inverse(min(max(xi + b, ilo), ihi))) - xn
            a, b = min(u, v), max(u, v)
            if b - a <= 0:
                logw = -math.inf
                out[i:] = -math.inf
                break
            logw = math.log(b - a)
            fa, fb = a / (b - a), b / (b - a)
        out[i] = logw
    return out


def _fit_line(n, y):
    A = np.column_stack([np.ones_like(n), n])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    ss = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid ** 2) / ss if ss > 0 else 1.0
    return coef[0], coef[1], r2


def make_backward_orbit(fmap: PiecewiseMap, points, labels) -> BackwardOrbit:
    points = np.asarray(points, dtype=float)
    labels = np.asarray(labels, dtype=np.int64)
    logw = backward_cylinder_widths(fmap, points, labels)
    n = np.arange(1, len(logw) + 1, dtype=float)
    ok = np.isfinite(logw)
    if ok.sum() >= 2:
        _, slope, _ = _fit_line(n[ok], logw[ok])
        lam = math.exp(-slope)
        scaled = logw[ok] + n[ok] * math.log(lam)
        C = math.exp(np.max(scaled))
        K = math.exp(np.max(scaled) - scaled[0])
    else:
        lam = C = K = math.nan
    return BackwardOrbit(points, labels, logw, K_hat=K, C_hat=C, lambda_hat=lam)


# ---------------------------------------------------------------- distortion

def _log_jacobian_along(fmap: PiecewiseMap, y: np.ndarray, word: Sequence[int]):
    """Sum of log|f'| along the word, plus the final images; raises on critical points."""
    acc = np.zeros_like(y)
    for k in word:
        b = fmap.branches[int(k)]
        d = np.asarray(b.derivative(y), dtype=float)
        if np.any(d == 0) or np.any(np.sign(d) != np.sign(d[0])):
            raise CriticalCylinderError("derivative vanishes inside the cylinder")
        acc += np.log(np.abs(d))
        y = np.asarray(b.forward(y), dtype=float)
    return acc, y


def distortion_ratio(fmap: PiecewiseMap, cyl: CylinderSet, grid: int = 65) -> float:
    """max |Df^n(y)| / |Df^n(z)| over grid pairs in the cylinder."""
    lo, hi = cyl.interval
    y = lo + (hi - lo) * (np.arange(grid) + 0.5) / grid
    word = cyl.word if cyl.depth > 0 else ()
    if not word:
        return 1.0
    s, _ = _log_jacobian_along(fmap, y, word)
    return float(math.exp(np.max(s) - np.min(s)))


def jacobian_distortion_bound(fmap: PiecewiseMap, backward: BackwardOrbit, gamma: float,
                              depth: Optional[int] = None, pairs: int = 200, seed=0,
                              jacobian: str = "measure") -> float:
    """Empirical B with J f^n(y_n) / J f^n(z_n) <= 1 + B |y_0 - z_0|^gamma.

    Pairs (y_0, z_0) are drawn in the image of the first branch and pulled
    back along the orbit's labels.  ``jacobian='measure'`` uses the Jacobian
    with respect to the invariant measure, ``'lebesgue'`` the plain |Df^n|.
    """
    rng = np.random.default_rng(seed)
    depth = len(backward) if depth is None else depth
    labels = backward.labels[:depth]
    lo, hi = fmap.branches[int(labels[0])].image
    span = hi - lo
    y0 = lo + span * (0.02 + 0.96 * rng.random(pairs))
    z0 = lo + span * (0.02 + 0.96 * rng.random(pairs))
    logj = []
    for start in (y0, z0):
        chain = pull_back(fmap, start, labels)
        s = np.zeros(pairs)
        for i, k in enumerate(labels):
            d = np.asarray(fmap.branches[int(k)].derivative(chain[i + 1]), dtype=float)
            if np.any(d == 0):
                raise CriticalCylinderError("derivative vanishes along the pulled-back pair")
            s += np.log(np.abs(d))
        if jacobian == "measure":
            dens = fmap.require_density()
            s += np.log(dens(chain[0])) - np.log(dens(chain[-1]))
        logj.append(s)
    ratio = np.exp(np.abs(logj[0] - logj[1]))
    rho = np.abs(y0 - z0)
    keep = rho > 0
    return float(np.max((ratio[keep] - 1.0) / rho[keep] ** gamma))


# ---------------------------------------------------------------- Lyapunov

def lyapunov_exponent(fmap: PiecewiseMap, burn_in: int = 1000, N: int = 1_000_000, seed=0) -> float:
    """Birkhoff average of log|f'| along one orbit started at a random interior point."""
    if N < 10_000:
        raise ValueError("N must be at least 1e4")
    rng = np.random.default_rng(seed)
    lo, hi = fmap.interval
    x0 = lo + (hi - lo) * (0.05 + 0.9 * rng.random())
    if fmap.kernel is not None:
        kind, p = fmap.kernel
        s, x = kernels.birkhoff_log_derivative(kind, p, x0, burn_in, N)
    else:
        x = x0
        for _ in range(burn_in):
            x = fmap(x)
        s = 0.0
        for _ in range(N):
            s += math.log(abs(fmap.derivative(x)))
            x = fmap(x)
    if not (math.isfinite(x) and lo - 1e-9 <= x <= hi + 1e-9):
        raise OrbitEscapeError(f"orbit left {fmap.interval}: {x!r}")
    if math.isnan(s):
        raise OrbitEscapeError("non-finite log-derivative sum")
    return s / N


def mean_log_derivative(fmap: PiecewiseMap, N: int = 1_000_000, seed=0) -> tuple[float, str]:
    """int log|f'| dmu and how it was obtained ('quadrature' or 'birkhoff').

    Quadrature in the quantile variable is used when the density is analytic
    and normalised; otherwise a Birkhoff average.
    """
    dens = fmap.density
    if dens is not None and dens.analytic and dens.normalized and dens.ppf is not None:
        cuts = sorted(float(dens.cdf(c)) for c in fmap.critical)

        def g(u):
            return math.log(abs(fmap.derivative(float(dens.ppf(u)))))

        val, _ = integrate.quad(g, 0.0, 1.0, points=cuts or None, limit=400,
                                epsabs=1e-13, epsrel=1e-13)
        return float(val), "quadrature"
    return lyapunov_exponent(fmap, N=N, seed=seed), "birkhoff"


# ---------------------------------------------------------------- periodic points

@dataclass(frozen=True)
class PeriodicOrbit:
    period: int
    points: tuple
    word: tuple
    multiplier: float
    log_multiplier: float

    @property
    def representative(self) -> float:
        return self.points[0]


def _primitive(word) -> bool:
    n = len(word)
    return all(word[d:] + word[:d] != word for d in range(1, n) if n % d == 0)


def _canonical(word) -> bool:
    return all(word <= word[i:] + word[:i] for i in range(1, len(word)))


def periodic_points(fmap: PiecewiseMap, n: int, tol: float = 1e-10) -> list[PeriodicOrbit]:
    """Orbits of prime period n, one per rotation class of branch words."""
    if not 1 <= n <= 14:
        raise ValueError("period must be in 1..14")
    br = fmap.branches
    orbits: list[PeriodicOrbit] = []
    seen: list[np.ndarray] = []
    for word in itertools.product(range(fmap.n_branches), repeat=n):
        if not (_primitive(word) and _canonical(word)):
            continue
        iv = word_cylinder(fmap, word)
        if iv is None:
            continue

        def g(x):
            for k in word:
                x = float(br[k].forward(x))
            return x

        lo, hi = iv
        glo, ghi = g(lo) - lo, g(hi) - hi
        if glo == 0.0:
            x = lo
        elif ghi == 0.0:
            x = hi
        elif glo * ghi > 0:
            continue
        else:
            x = optimize.brentq(lambda t: g(t) - t, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps,
                                maxiter=500)
        pts = [x]
        for k in word[:-1]:
            pts.append(float(br[k].forward(pts[-1])))
        if fmap.right_open and max(pts) >= fmap.interval[1]:
            continue
        key = np.sort(pts)
        if any(np.max(np.abs(key - s)) < tol for s in seen):
            continue
        seen.append(key)
        logs = [math.log(abs(float(br[k].derivative(p)))) if br[k].derivative(p) != 0 else -math.inf
                for k, p in zip(word, pts)]
        lm = float(sum(logs))
        orbits.append(PeriodicOrbit(n, tuple(pts), tuple(word), math.exp(lm), lm))
    return orbits


# ---------------------------------------------------------------- contraction

@dataclass(frozen=True)
class ContractionReport:
    lambda_hat: float
    K_hat: float
    r2: float
    degenerate: bool
    reason: str = ""


def contraction_check(fmap: PiecewiseMap, backward: BackwardOrbit, rel_tol: float = 0.25,
                      r2_min: float = 0.95) -> ContractionReport:
    """Fit diam P_n[x_n] ~ C lambda^-n along a backward orbit.

    The fit is flagged degenerate when the exponential model is poor: low R^2
    or clearly different rates on the two halves of the orbit.
    """
    N = len(backward)
    if N < 20:
        raise ValueError("backward orbit must have at least 20 steps")
    logw = backward.log_widths
    n = np.arange(1, N + 1, dtype=float)
    ok = np.isfinite(logw)
    c0, slope, r2 = _fit_line(n[ok], logw[ok])
    lam = math.exp(-slope)
    K = math.exp(c0)
    h = N // 2
    first = ok & (n <= h)
    second = ok & (n > h)
    reasons = []
    if r2 < r2_min:
        reasons.append(f"r2={r2:.3f}")
    if first.sum() >= 2 and second.sum() >= 2:
        s1 = -_fit_line(n[first], logw[first])[1]
        s2 = -_fit_line(n[second], logw[second])[1]
        ref = max(abs(s1), abs(s2), 1e-300)
        if abs(s1 - s2) / ref > rel_tol:
            reasons.append(f"half-rates {math.exp(s1):.4g} vs {math.exp(s2):.4g}")
    if slope >= 0:
        reasons.append("no contraction")
    return ContractionReport(lam, K, float(r2), bool(reasons), "; ".join(reasons))
