"""Regularity gates and exponent estimates: (PH), Hölder fits, singular cocycles."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from ..dynamics.maps import PiecewiseMap
from ..dynamics.orbits import sample_backward_batch
from ..groups import GroupElement, distance
from .cocycle import ArrayEps, EpsSequence, Singularity

__all__ = [
    "PHResult",
    "HolderFit",
    "SingularExponent",
    "HypothesisViolated",
    "BorelCantelliResult",
    "MartingaleResult",
    "ph_check",
    "holder_exponent_estimate",
    "singular_alpha_tilde",
    "singular_effective_exponent",
    "borel_cantelli_avoidance",
    "mp_regularity_gate",
    "martingale_density_check",
]

CLOSED_FORM_HORIZON = 1e12


class HypothesisViolated(ValueError):
    pass


@dataclass(frozen=True)
class PHResult:
    ok: bool
    margin: float
    rate: float


def ph_check(mu_u: float, lam: float, alpha: float, R: Optional[float] = None) -> PHResult:
    """1 <= mu_u < lam^alpha; with ``R`` the tower form mu_u < lam^(alpha / R)."""
    if lam <= 1 or not 0 < alpha <= 1 or mu_u < 1:
        raise ValueError("need lam > 1, alpha in (0, 1], mu_u >= 1")
    rate = lam ** (alpha / R) if R is not None else lam ** alpha
    return PHResult(mu_u < rate, rate - mu_u, rate)


@dataclass(frozen=True)
class HolderFit:
    alpha_hat: float
    coefficient: float
    intercept: float
    r2: float
    decades: float
    low_confidence: bool


def holder_exponent_estimate(samples) -> HolderFit:
    """Least-squares slope of log d(psi x, psi y) against log|x - y|.

    ``coefficient`` is the smallest C with d <= C |x - y|^alpha_hat on the
    samples; ``intercept`` is the fitted constant.
    """
    arr = np.asarray(samples, dtype=float)
    r = np.abs(arr[:, 0] - arr[:, 1])
    d = arr[:, 2]
    keep = (r > 0) & (d > 0) & np.isfinite(d)
    r, d = r[keep], d[keep]
    if len(r) < 2:
        return HolderFit(math.nan, math.nan, math.nan, 0.0, 0.0, True)
    lr, ld = np.log(r), np.log(d)
    slope, icpt = np.polyfit(lr, ld, 1)
    pred = icpt + slope * lr
    ss = np.sum((ld - ld.mean()) ** 2)
    r2 = 1.0 - np.sum((ld - pred) ** 2) / ss if ss > 0 else 1.0
    alpha = float(np.clip(slope, 1e-12, 1.2))
    coeff = float(np.max(d / r ** alpha))
    decades = float(np.log10(r.max() / r.min()))
    low = decades < 3 or len(r) < 200
    return HolderFit(alpha, coeff, float(math.exp(icpt)), float(r2), decades, low)


@dataclass(frozen=True)
class SingularExponent:
    alpha_tilde: float
    exponent: float
    window: tuple


def singular_alpha_tilde(sing: Singularity, lam: float, window: float = 0.5,
                         horizon: float = CLOSED_FORM_HORIZON, samples: int = 4096) -> tuple[float, tuple]:
    """limsup_n c log(1/eps_n) / (n log lam), c = 1 (log) or p + 1 (pole).

    The limsup is the max over the last ``window`` fraction of the available
    indices; closed-form sequences are evaluated up to ``horizon``.
    """
    if sing.kind not in ("log", "pole") or sing.eps is None:
        raise ValueError("needs a log or pole singularity with an eps sequence")
    if lam <= 1:
        raise ValueError("lam must exceed 1")
    eps: EpsSequence = sing.eps
    factor = 1.0 if sing.kind == "log" else sing.order + 1.0
    if eps.closed_form:
        top = horizon
        start = max(1.0, top * (1.0 - window))
        n = np.unique(np.round(np.geomspace(start, top, samples)))
    else:
        top = len(eps)
        if top < 50:
            raise ValueError("need at least 50 terms")
        start = max(1, top - int(math.floor(top * window)) + 1)
        n = np.arange(start, top + 1)
    vals = factor * eps.log_inv(n) / (n * math.log(lam))
    return float(np.max(vals)), (int(n[0]), int(n[-1]))


def singular_effective_exponent(sing: Singularity, lam: float, iota: float, **kw) -> SingularExponent:
    """Effective Hölder exponent 1 - alpha_tilde - iota."""
    if iota <= 0:
        raise ValueError("iota must be positive")
    at, win = singular_alpha_tilde(sing, lam, **kw)
    if at >= 1:
        raise HypothesisViolated(f"alpha_tilde = {at:.6g} >= 1")
    return SingularExponent(at, 1.0 - at - iota, win)


@dataclass
class BorelCantelliResult:
    partial_sums: np.ndarray
    summable_estimate: float
    tail_estimate: float
    decay_exponent: float
    cauchy: bool
    last_hits: np.ndarray = field(repr=False)
    avoidance_depth: dict = field(default_factory=dict)

    def quantile(self, q: float) -> float:
        return float(np.quantile(self.last_hits, q))


def borel_cantelli_avoidance(fmap: PiecewiseMap, c: float, eps, seed: int = 0, orbits: int = 1000,
                             length: int = 200, terms: int = 1000) -> BorelCantelliResult:
    """Partial sums of mu(B(c, eps_n)) and the last n with x_n in B(c, eps_n) on backward orbits.

    The tail beyond ``terms`` is extrapolated from a power-law fit over the
    last decade; a fitted decay exponent <= 1.05 flags divergence.
    """
    dens = fmap.require_density()
    lo, hi = fmap.interval
    if not lo <= c <= hi:
        raise ValueError("c must lie in the phase interval")
    if not isinstance(eps, EpsSequence):
        eps = ArrayEps(eps)
    n = np.arange(1, terms + 1)
    r = np.asarray(eps.value(n), dtype=float)
    mu = np.array([dens.measure(max(lo, c - e), min(hi, c + e)) for e in r])
    partial = np.cumsum(mu)
    a = max(1, terms // 10)
    sel = (n >= a) & (mu > 0)
    if sel.sum() >= 3:
        slope = np.polyfit(np.log(n[sel]), np.log(mu[sel]), 1)[0]
        s = -float(slope)
    else:
        s = math.inf
    if s <= 1.05:
        tail, cauchy = math.inf, False
    elif math.isinf(s):
        tail, cauchy = 0.0, True
    else:
        tail = float(mu[-1] * terms / (s - 1.0))
        cauchy = True
    rng = np.random.default_rng(seed)
    x0 = np.asarray(dens.sample(rng, orbits), dtype=float)
    pts, _ = sample_backward_batch(fmap, x0, length, rng)
    m = np.arange(1, length + 1)
    rad = np.asarray(eps.value(m), dtype=float)
    hit = np.abs(pts[1:] - c) < rad[:, None]
    last = np.where(hit.any(axis=0), length - np.argmax(hit[::-1], axis=0), 0)
    hist = dict(zip(*np.unique(last, return_counts=True)))
    hist = {int(k): int(v) for k, v in hist.items()}
    return BorelCantelliResult(partial, float(partial[-1] + (tail if cauchy else 0.0)), tail, s,
                               cauchy, last, hist)


def mp_regularity_gate(p: float, alpha: float) -> bool:
    """Hölder exponent threshold alpha > p / (1 + p) for the intermittent family."""
    if p < 0 or not 0 < alpha <= 1:
        raise ValueError("need p >= 0 and alpha in (0, 1]")
    return alpha > p / (1.0 + p)


@dataclass
class MartingaleResult:
    proportion: float
    per_depth: dict
    fractions: np.ndarray = field(repr=False)


def martingale_density_check(phi: Callable, depths: Sequence[int], eta: float, samples: int = 1000,
                             seed: int = 0, grid: int = 64) -> MartingaleResult:
    """Share of sampled x whose dyadic cell of depth n mostly agrees with phi(x) to within eta.

    The fraction inside a cell is the Lebesgue share of ``grid`` midpoints y
    with d(phi x, phi y) < eta.
    """
    rng = np.random.default_rng(seed)
    xs = rng.random(samples)
    offs = (np.arange(grid) + 0.5) / grid

    def dist(a, b):
        if isinstance(a, GroupElement):
            return distance(a, b)
        return abs(a - b)

    vec = None
    try:
        test = np.asarray(phi(np.array([0.25, 0.5])))
        vec = test.shape == (2,)
    except Exception:
        vec = False
    per_depth = {}
    fr = None
    for depth in depths:
        w = 2.0 ** -depth
        left = np.floor(xs / w) * w
        ys = left[:, None] + w * offs[None, :]
        if vec:
            fx = np.asarray(phi(xs), dtype=float)
            fy = np.asarray(phi(ys.ravel()), dtype=float).reshape(ys.shape)
            close = np.abs(fy - fx[:, None]) < eta
        else:
            close = np.array([[dist(phi(x), phi(y)) < eta for y in row] for x, row in zip(xs, ys)])
        fr = close.mean(axis=1)
        per_depth[int(depth)] = float(np.mean(fr > 1.0 - eta))
    return MartingaleResult(per_depth[int(depths[-1])], per_depth, fr)
