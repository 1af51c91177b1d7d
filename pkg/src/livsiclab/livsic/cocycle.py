"""Cocycles: an evaluation rule plus Hölder and singularity data."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from ..groups import Circle, GroupElement, RealVec, distance

__all__ = [
    "Cocycle",
    "Singularity",
    "EpsSequence",
    "GeometricEps",
    "PowerEps",
    "InverseLogEps",
    "ArrayEps",
    "real_cocycle",
    "log_derivative_cocycle",
]


class EpsSequence:
    """Positive decreasing radii eps_n, n = 1, 2, ...

    ``closed_form`` sequences evaluate log(1/eps_n) analytically at any n.
    """

    closed_form = True

    def value(self, n):
        return np.exp(-self.log_inv(n))

    def log_inv(self, n):
        raise NotImplementedError

    def __len__(self):
        raise TypeError("closed-form sequences have no length")


@dataclass(frozen=True)
class GeometricEps(EpsSequence):
    """eps_n = lam^(-beta n)."""

    lam: float
    beta: float

    def log_inv(self, n):
        return self.beta * np.asarray(n, dtype=float) * math.log(self.lam)


@dataclass(frozen=True)
class PowerEps(EpsSequence):
    """eps_n = scale * n^(-k)."""

    k: float
    scale: float = 1.0

    def log_inv(self, n):
        return self.k * np.log(np.asarray(n, dtype=float)) - math.log(self.scale)


@dataclass(frozen=True)
class InverseLogEps(EpsSequence):
    """eps_n = 1 / log(n + 1); shrinks too slowly to be summable."""

    def log_inv(self, n):
        return np.log(np.log(np.asarray(n, dtype=float) + 1.0))


class ArrayEps(EpsSequence):
    closed_form = False

    def __init__(self, values: Sequence[float]):
        v = np.asarray(values, dtype=float)
        if np.any(v <= 0):
            raise ValueError("eps sequence must be positive")
        if np.any(np.diff(v) > 0):
            raise ValueError("eps sequence must be non-increasing")
        self.values = v

    def __len__(self):
        return len(self.values)

    def log_inv(self, n):
        return -np.log(self.values[np.asarray(n) - 1])

    def value(self, n):
        return self.values[np.asarray(n) - 1]


@dataclass(frozen=True)
class Singularity:
    """kind is one of 'none', 'bounded', 'log', 'pole'."""

    kind: str = "none"
    points: tuple = ()
    order: float = 0.0
    eps: Optional[EpsSequence] = None

    def __post_init__(self):
        if self.kind not in ("none", "bounded", "log", "pole"):
            raise ValueError(f"unknown singularity kind {self.kind!r}")
        if self.kind == "pole" and self.order <= 0:
            raise ValueError("pole order must be positive")

    @classmethod
    def none(cls):
        return cls()

    @classmethod
    def log(cls, points, eps):
        return cls("log", tuple(points), 0.0, eps)

    @classmethod
    def pole(cls, points, order, eps):
        return cls("pole", tuple(points), float(order), eps)

    @classmethod
    def bounded(cls, points):
        return cls("bounded", tuple(points))


class Cocycle:
    """phi: M -> G with Hölder data.

    >>> c = real_cocycle(lambda x: 2 * x)
    >>> c(0.25)
    RealVec(0.5)
    """

    def __init__(self, fn: Callable[[float], GroupElement], *, identity: GroupElement,
                 holder_exponent: float = 1.0, holder_coefficient: float = math.inf,
                 singularity: Singularity = Singularity(), name: str = ""):
        if not 0.0 < holder_exponent <= 1.0:
            raise ValueError("Hölder exponent must lie in (0, 1]")
        self.fn = fn
        self._identity = identity
        self.holder_exponent = float(holder_exponent)
        self.holder_coefficient = float(holder_coefficient)
        self.singularity = singularity
        self.name = name

    def __call__(self, x) -> GroupElement:
        return self.fn(x)

    def identity(self) -> GroupElement:
        return self._identity

    def __repr__(self):
        return f"Cocycle({self.name or self.fn!r})"

    def check_holder(self, xs, ys, slack: float = 0.05) -> float:
        """Largest ratio d(phi x, phi y) / (C |x - y|^alpha) over the pairs."""
        worst = 0.0
        for x, y in zip(xs, ys):
            r = abs(x - y)
            if r == 0:
                continue
            worst = max(worst, distance(self(x), self(y)) / (self.holder_coefficient * r ** self.holder_exponent))
        return worst / (1.0 + slack)


def real_cocycle(fn: Callable[[float], float], *, holder_exponent=1.0, holder_coefficient=math.inf,
                 singularity=Singularity(), name="") -> Cocycle:
    """Wrap a scalar function as an R^1-valued cocycle."""
    return Cocycle(lambda x: RealVec([fn(x)]), identity=RealVec([0.0]),
                   holder_exponent=holder_exponent, holder_coefficient=holder_coefficient,
                   singularity=singularity, name=name)


def log_derivative_cocycle(fmap, shift: float = 0.0) -> Cocycle:
    """x -> log|f'(x)| - shift, with a log singularity at each critical point."""
    sing = Singularity.log(fmap.critical, None) if fmap.critical else Singularity()

    def fn(x):
        d = abs(float(fmap.derivative(x)))
        return RealVec([(math.log(d) if d > 0 else -math.inf) - shift])

    return Cocycle(fn, identity=RealVec([0.0]), singularity=sing,
                   name=f"log|{fmap.name}'| - {shift:.6g}")
