"""Piecewise monotone interval maps and their invariant densities."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .. import kernels

__all__ = [
    "Branch",
    "Density",
    "HistogramDensity",
    "PiecewiseMap",
    "DensityUnavailableError",
    "builtin",
    "estimate_density",
    "map_from_json",
]


class DensityUnavailableError(RuntimeError):
    pass


@dataclass(frozen=True)
class Branch:
    """One monotone branch: ``forward`` maps ``domain`` onto ``image``."""

    domain: tuple[float, float]
    forward: Callable
    derivative: Callable
    inverse: Callable
    image: tuple[float, float]
    increasing: bool

    def contains(self, x: float) -> bool:
        return self.domain[0] <= x <= self.domain[1]


class Density:
    """Invariant density with optional CDF and sampler.

    ``normalized=False`` marks a shape known only up to a constant (enough
    for ratios h(y)/h(x)).
    """

    def __init__(self, pdf, cdf=None, sampler=None, *, name="", analytic=True, normalized=True,
                 support=None, ppf=None):
        self.pdf = pdf
        self.ppf = ppf
        self.cdf = cdf
        self.sampler = sampler
        self.name = name
        self.analytic = analytic
        self.normalized = normalized
        self.support = support

    def __call__(self, x):
        return self.pdf(x)

    def measure(self, a: float, b: float) -> float:
        if self.cdf is None:
            raise DensityUnavailableError(f"density {self.name!r} has no CDF")
        return float(self.cdf(b) - self.cdf(a))

    def sample(self, rng: np.random.Generator, size=None):
        if self.sampler is None:
            raise DensityUnavailableError(f"density {self.name!r} cannot be sampled")
        return self.sampler(rng, size)


class HistogramDensity(Density):
    def __init__(self, edges: np.ndarray, values: np.ndarray, name="histogram"):
        self.edges = np.asarray(edges, dtype=float)
        self.values = np.asarray(values, dtype=float)
        widths = np.diff(self.edges)
        cum = np.concatenate([[0.0], np.cumsum(self.values * widths)])
        self._cum = cum

        def pdf(x):
            k = np.clip(np.searchsorted(self.edges, x, side="right") - 1, 0, len(self.values) - 1)
            return self.values[k]

        def cdf(x):
            x = np.clip(x, self.edges[0], self.edges[-1])
            k = np.clip(np.searchsorted(self.edges, x, side="right") - 1, 0, len(self.values) - 1)
            return cum[k] + self.values[k] * (x - self.edges[k])

        def sampler(rng, size):
            u = rng.random(size) * cum[-1]
            k = np.clip(np.searchsorted(cum, u, side="right") - 1, 0, len(self.values) - 1)
            with np.errstate(divide="ignore", invalid="ignore"):
                off = np.where(self.values[k] > 0, (u - cum[k]) / self.values[k], 0.0)
            return self.edges[k] + off

        super().__init__(pdf, cdf, sampler, name=name, analytic=False,
                         support=(self.edges[0], self.edges[-1]))

    def to_csv(self, path) -> None:
        from ..io import write_csv

        write_csv(path, ["bin_left", "bin_right", "density"],
                  ((float(a), float(b), float(v))
                   for a, b, v in zip(self.edges[:-1], self.edges[1:], self.values)))

    @classmethod
    def from_csv(cls, path) -> "HistogramDensity":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        edges = [float(rows[0]["bin_left"])] + [float(r["bin_right"]) for r in rows]
        return cls(np.array(edges), np.array([float(r["density"]) for r in rows]))


def _uniform_density(lo, hi):
    w = hi - lo
    return Density(
        lambda x: np.ones_like(np.asarray(x, dtype=float)) / w,
        lambda x: (np.clip(x, lo, hi) - lo) / w,
        lambda rng, size: lo + w * rng.random(size),
        name="lebesgue",
        ppf=lambda u: lo + w * np.asarray(u, dtype=float),
        support=(lo, hi),
    )


def _arcsine_density():
    def pdf(x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            return 1.0 / (np.pi * np.sqrt(1.0 - x * x))

    return Density(
        pdf,
        lambda x: 0.5 + np.arcsin(np.clip(x, -1.0, 1.0)) / np.pi,
        lambda rng, size: -np.cos(np.pi * rng.random(size)),
        name="arcsine",
        ppf=lambda u: -np.cos(np.pi * np.asarray(u, dtype=float)),
        support=(-1.0, 1.0),
    )


class PiecewiseMap:
    """Interval map given by finitely (or, after truncation, countably) many monotone branches.

    Branch ``k`` owns ``[a_k, a_{k+1})``; the last branch also owns the right
    end of the phase interval unless ``right_open`` is set.
    """

    def __init__(self, name: str, interval: tuple[float, float], branches: Sequence[Branch], *,
                 params: Optional[dict] = None, critical: Sequence[float] = (),
                 density: Optional[Density] = None, kernel: Optional[tuple[int, float]] = None,
                 right_open: bool = False, critical_order: float = 0.0):
        self.name = name
        self.interval = (float(interval[0]), float(interval[1]))
        self.branches = list(branches)
        self.params = dict(params or {})
        self.critical = tuple(critical)
        self.critical_order = critical_order
        self.density = density
        self.kernel = kernel
        self.right_open = right_open
        self._left = np.array([b.domain[0] for b in self.branches])

    def __repr__(self):
        return f"PiecewiseMap({self.name!r}, {self.params})"

    @property
    def n_branches(self) -> int:
        return len(self.branches)

    @property
    def breakpoints(self) -> list[float]:
        return [b.domain[0] for b in self.branches] + [self.branches[-1].domain[1]]

    def branch_index(self, x: float) -> int:
        lo, hi = self.interval
        if not (lo - 1e-12 <= x <= hi + 1e-12):
            raise ValueError(f"{x!r} outside phase interval {self.interval}")
        k = int(np.searchsorted(self._left, x, side="right")) - 1
        return min(max(k, 0), self.n_branches - 1)

    def branch_indices(self, x: np.ndarray) -> np.ndarray:
        k = np.searchsorted(self._left, x, side="right") - 1
        return np.clip(k, 0, self.n_branches - 1)

    def __call__(self, x):
        if np.ndim(x) == 0:
            return float(self.branches[self.branch_index(x)].forward(x))
        x = np.asarray(x, dtype=float)
        k = self.branch_indices(x)
        out = np.empty_like(x)
        for j, b in enumerate(self.branches):
            m = k == j
            if np.any(m):
                out[m] = b.forward(x[m])
        return out

    def derivative(self, x):
        if np.ndim(x) == 0:
            return float(self.branches[self.branch_index(x)].derivative(x))
        x = np.asarray(x, dtype=float)
        k = self.branch_indices(x)
        out = np.empty_like(x)
        for j, b in enumerate(self.branches):
            m = k == j
            if np.any(m):
                out[m] = b.derivative(x[m])
        return out

    def inverse(self, label: int, y):
        return self.branches[label].inverse(y)

    def preimages(self, y: float, tol: float = 1e-13) -> list[tuple[int, float]]:
        out = []
        for k, b in enumerate(self.branches):
            lo, hi = b.image
            if lo - tol <= y <= hi + tol:
                out.append((k, float(b.inverse(min(max(y, lo), hi)))))
        return out

    def iterate(self, x: float, n: int) -> float:
        for _ in range(n):
            x = self(x)
        return x

    def contains(self, x: float) -> bool:
        lo, hi = self.interval
        if self.right_open:
            return lo <= x < hi
        return lo <= x <= hi

    def with_density(self, density: Density) -> "PiecewiseMap":
        return PiecewiseMap(self.name, self.interval, self.branches, params=self.params,
                            critical=self.critical, density=density, kernel=self.kernel,
                            right_open=self.right_open, critical_order=self.critical_order)

    def require_density(self) -> Density:
        if self.density is None:
            raise DensityUnavailableError(
                f"no invariant density for {self.name}; run estimate_density(map) first"
            )
        return self.density

    def to_dict(self) -> dict:
        return {"name": self.name, "params": self.params, "branchEndpoints": self.breakpoints}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def map_from_json(text: str) -> PiecewiseMap:
    d = json.loads(text)
    m = builtin(d["name"], **d.get("params", {}))
    if "branchEndpoints" in d and not np.allclose(d["branchEndpoints"], m.breakpoints, atol=1e-12):
        raise ValueError("branch endpoints do not match the named map")
    return m


# ---------------------------------------------------------------- builtins

def _doubling() -> PiecewiseMap:
    two = lambda x: np.full_like(np.asarray(x, dtype=float), 2.0)
    return PiecewiseMap(
        "doubling", (0.0, 1.0),
        [
            Branch((0.0, 0.5), lambda x: 2.0 * x, two, lambda y: 0.5 * y, (0.0, 1.0), True),
            Branch((0.5, 1.0), lambda x: 2.0 * x - 1.0, two, lambda y: 0.5 * (y + 1.0),
                   (0.0, 1.0), True),
        ],
        params={}, density=_uniform_density(0.0, 1.0), kernel=(kernels.DOUBLING, 0.0),
        right_open=True,
    )


def _tent(slope: float, name: str = "tent") -> PiecewiseMap:
    if not 1.0 < slope <= 2.0:
        raise ValueError(f"tent slope must lie in (1, 2], got {slope}")
    s = float(slope)
    top = s / 2.0
    deriv_l = lambda x: np.full_like(np.asarray(x, dtype=float), s)
    deriv_r = lambda x: np.full_like(np.asarray(x, dtype=float), -s)
    density = _uniform_density(0.0, 1.0) if s == 2.0 else None
    params = {} if name == "chebyshev_tent" else {"slope": s}
    return PiecewiseMap(
        name, (0.0, 1.0),
        [
            Branch((0.0, 0.5), lambda x: s * x, deriv_l, lambda y: y / s, (0.0, top), True),
            Branch((0.5, 1.0), lambda x: s * (1.0 - x), deriv_r, lambda y: 1.0 - y / s,
                   (0.0, top), False),
        ],
        params=params, critical=(0.5,), density=density, kernel=(kernels.TENT, s),
    )


def _quadratic(a: float) -> PiecewiseMap:
    if not 0.0 < a <= 2.0:
        raise ValueError(f"quadratic parameter must lie in (0, 2], got {a}")
    a = float(a)

    def fwd(x):
        return 1.0 - a * x * x

    def der(x):
        return -2.0 * a * x

    def inv_left(y):
        return -np.sqrt(np.maximum(1.0 - y, 0.0) / a)

    def inv_right(y):
        return np.sqrt(np.maximum(1.0 - y, 0.0) / a)

    img = (1.0 - a, 1.0)
    return PiecewiseMap(
        "quadratic", (-1.0, 1.0),
        [
            Branch((-1.0, 0.0), fwd, der, inv_left, img, True),
            Branch((0.0, 1.0), fwd, der, inv_right, img, False),
        ],
        params={"a": a}, critical=(0.0,), critical_order=2.0,
        density=_arcsine_density() if a == 2.0 else None,
        kernel=(kernels.QUADRATIC, a),
    )


def _mp_shape_density(p: float) -> Density:
    # shape x^-p of the invariant density near the neutral point; fine for ratios only
    def pdf(x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            return np.power(np.maximum(x, 1e-300), -p)

    return Density(pdf, name=f"mp_shape(p={p})", analytic=False, normalized=False,
                   support=(0.0, 1.0))


def _manneville_pomeau(p: float) -> PiecewiseMap:
    if p < 0:
        raise ValueError(f"Manneville-Pomeau exponent must be >= 0, got {p}")
    p = float(p)
    c = 2.0 ** p

    def fwd_l(x):
        return x + c * np.power(x, 1.0 + p)

    def der_l(x):
        return 1.0 + (1.0 + p) * c * np.power(x, p)

    def inv_l(y):
        if np.ndim(y) == 0:
            return kernels.mp_left_inverse(float(y), p)
        return kernels.mp_left_inverse_array(np.ascontiguousarray(y, dtype=float), p)

    two = lambda x: np.full_like(np.asarray(x, dtype=float), 2.0)
    return PiecewiseMap(
        "manneville_pomeau", (0.0, 1.0),
        [
            Branch((0.0, 0.5), fwd_l, der_l, inv_l, (0.0, 1.0), True),
            Branch((0.5, 1.0), lambda x: 2.0 * x - 1.0, two, lambda y: 0.5 * (y + 1.0),
                   (0.0, 1.0), True),
        ],
        params={"p": p}, density=_uniform_density(0.0, 1.0) if p == 0 else _mp_shape_density(p),
        kernel=(kernels.MP, p),
    )


def builtin(name: str, **params) -> PiecewiseMap:
    """Construct one of the named maps.

    ``doubling``, ``tent(slope)``, ``quadratic(a)`` (x -> 1 - a x^2 on [-1, 1]),
    ``manneville_pomeau(p)`` and ``chebyshev_tent`` (the slope-2 tent).
    """
    if name == "doubling":
        return _doubling()
    if name == "tent":
        return _tent(params.get("slope", 2.0))
    if name == "chebyshev_tent":
        return _tent(2.0, name="chebyshev_tent")
    if name == "quadratic":
        return _quadratic(params.get("a", 2.0))
    if name in ("manneville_pomeau", "mp"):
        return _manneville_pomeau(params.get("p", 1.0))
    raise ValueError(f"unknown map {name!r}")


def estimate_density(fmap: PiecewiseMap, bins: int = 4096, iters: int = 10_000_000,
                     burn_in: int = 1000, seed: int = 0) -> PiecewiseMap:
    """Histogram estimate of the invariant density from one long orbit.

    Returns a copy of ``fmap`` carrying the histogram.
    """
    if fmap.kernel is None:
        raise ValueError("density estimation needs a builtin map")
    rng = np.random.default_rng(seed)
    lo, hi = fmap.interval
    x0 = lo + (hi - lo) * (0.1 + 0.8 * rng.random())
    kind, p = fmap.kernel
    counts = kernels.orbit_histogram(kind, p, x0, burn_in, iters, lo, hi, bins)
    edges = np.linspace(lo, hi, bins + 1)
    values = counts / (iters * (hi - lo) / bins)
    return fmap.with_density(HistogramDensity(edges, values, name=f"histogram({fmap.name})"))
