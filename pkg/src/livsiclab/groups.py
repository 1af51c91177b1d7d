"""Concrete Lie groups used as cocycle targets.

Three variants are supported: real vector groups (R^d under addition), the
circle in turn units (R/Z), and unitary matrices U(d).  Every group carries a
right-invariant metric and the operator norm of its adjoint action.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import expm, schur

__all__ = [
    "GroupError",
    "GroupMismatchError",
    "AntipodalError",
    "OrbitInconsistencyError",
    "GroupElement",
    "RealVec",
    "Circle",
    "Unitary",
    "GroupMetric",
    "TwistSpec",
    "multiply",
    "inverse",
    "identity_like",
    "distance",
    "ad_norm",
    "cocycle_product",
    "growth_rate_mu_u",
    "reduce_transfer_to_coboundary",
    "twisted_cocycle",
    "trivial_character",
    "winding_character",
    "determinant_character",
    "random_unitary",
    "interpolate",
    "conjugate",
]

UNITARY_TOL = 1e-12
ANTIPODAL_TOL = 1e-12


class GroupError(Exception):
    """Base class for group related failures."""


class GroupMismatchError(GroupError, TypeError):
    pass


class AntipodalError(GroupError, ValueError):
    """The principal logarithm is undefined: an eigenvalue sits at -1."""


class OrbitInconsistencyError(ValueError):
    def __init__(self, index: int, residual: float):
        super().__init__(
            f"orbit inconsistent at index {index}: |f(x[{index - 1}]) - x[{index}]| = {residual:.3e}"
        )
        self.index = index
        self.residual = residual


class GroupElement:
    """Common behaviour; concrete variants below."""

    __slots__ = ()

    def __mul__(self, other):
        return multiply(self, other)

    def inverse(self):
        return inverse(self)

    def identity(self):
        return identity_like(self)

    def chart(self) -> np.ndarray:
        """Real coordinates in a neighbourhood of this element (used for interpolation)."""
        raise NotImplementedError


class RealVec(GroupElement):
    __slots__ = ("values",)

    def __init__(self, values):
        v = np.atleast_1d(np.asarray(values, dtype=float))
        if v.ndim != 1:
            raise ValueError("RealVec expects a 1-d vector")
        v.setflags(write=False)
        self.values = v

    @property
    def dim(self) -> int:
        return self.values.shape[0]

    def chart(self):
        return self.values.copy()

    def __repr__(self):
        if self.dim == 1:
            return f"RealVec({float(self.values[0])!r})"
        return f"RealVec({self.values.tolist()!r})"


class Circle(GroupElement):
    """Element of R/Z, stored as an angle in [0, 1) turns."""

    __slots__ = ("angle",)

    def __init__(self, angle: float):
        a = float(angle) % 1.0
        # float modulo can round up to exactly 1.0 for tiny negative inputs
        self.angle = 0.0 if a >= 1.0 else a

    dim = 1

    def chart(self):
        return np.array([self.angle])

    def __repr__(self):
        return f"Circle({self.angle!r})"


class Unitary(GroupElement):
    """Element of U(d).

    Products are re-orthonormalised (polar factor) once the chain of
    multiplications since the last projection reaches ``reortho_every``.
    """

    __slots__ = ("matrix", "_age")
    reortho_every = 64

    def __init__(self, matrix, *, check: bool = True, _age: int = 0):
        m = np.array(matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("Unitary expects a square matrix")
        if check:
            err = np.linalg.norm(m @ m.conj().T - np.eye(m.shape[0]))
            if err > 1e-8:
                raise ValueError(f"matrix is not unitary (||MM* - I|| = {err:.2e})")
            if err > UNITARY_TOL:
                m = _polar(m)
        m.setflags(write=False)
        self.matrix = m
        self._age = _age

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def unitarity_defect(self) -> float:
        m = self.matrix
        return float(np.linalg.norm(m @ m.conj().T - np.eye(self.dim)))

    def chart(self):
        return _skew_coords(_principal_log(self.matrix))

    def __repr__(self):
        return f"Unitary({self.matrix.tolist()!r})"


def _polar(m: np.ndarray) -> np.ndarray:
    u, _, vh = np.linalg.svd(m)
    return u @ vh


def _check_same(g: GroupElement, h: GroupElement) -> None:
    if type(g) is not type(h):
        raise GroupMismatchError(f"cannot combine {type(g).__name__} with {type(h).__name__}")
    if isinstance(g, (RealVec, Unitary)) and g.dim != h.dim:
        raise GroupMismatchError(f"dimension mismatch: {g.dim} vs {h.dim}")


def multiply(g: GroupElement, h: GroupElement) -> GroupElement:
    _check_same(g, h)
    if isinstance(g, RealVec):
        return RealVec(g.values + h.values)
    if isinstance(g, Circle):
        return Circle(g.angle + h.angle)
    age = g._age + h._age + 1
    m = g.matrix @ h.matrix
    if age >= Unitary.reortho_every:
        return Unitary(_polar(m), check=False, _age=0)
    return Unitary(m, check=False, _age=age)


def inverse(g: GroupElement) -> GroupElement:
    if isinstance(g, RealVec):
        return RealVec(-g.values)
    if isinstance(g, Circle):
        return Circle(-g.angle)
    return Unitary(g.matrix.conj().T, check=False, _age=g._age)


def identity_like(g: GroupElement) -> GroupElement:
    if isinstance(g, RealVec):
        return RealVec(np.zeros(g.dim))
    if isinstance(g, Circle):
        return Circle(0.0)
    return Unitary(np.eye(g.dim), check=False)


def conjugate(a: GroupElement, g: GroupElement) -> GroupElement:
    """a g a^{-1}."""
    if isinstance(a, (RealVec, Circle)):
        _check_same(a, g)
        return g
    return multiply(multiply(a, g), inverse(a))


# ---------------------------------------------------------------- metric

def _unitary_log_angles(w: np.ndarray) -> np.ndarray:
    theta = np.angle(np.linalg.eigvals(w))
    if np.any(np.pi - np.abs(theta) < ANTIPODAL_TOL):
        raise AntipodalError("g h^-1 has an eigenvalue at -1; principal log undefined")
    return theta


def _principal_log(w: np.ndarray) -> np.ndarray:
    # complex Schur form of a normal matrix is diagonal up to rounding
    t, z = schur(w, output="complex")
    theta = np.angle(np.diag(t))
    if np.any(np.pi - np.abs(theta) < ANTIPODAL_TOL):
        raise AntipodalError("eigenvalue at -1; principal log undefined")
    return (z * (1j * theta)) @ z.conj().T


def interpolate(g: GroupElement, h: GroupElement, t: float) -> GroupElement:
    """Point at fraction t along the chart segment from g to h (geodesic for the metric)."""
    _check_same(g, h)
    if isinstance(g, RealVec):
        return RealVec((1.0 - t) * g.values + t * h.values)
    if isinstance(g, Circle):
        delta = (h.angle - g.angle + 0.5) % 1.0 - 0.5
        return Circle(g.angle + t * delta)
    step = expm(t * _principal_log(h.matrix @ g.matrix.conj().T))
    return Unitary(step @ g.matrix, check=False)


def _skew_coords(a: np.ndarray) -> np.ndarray:
    """Real coordinates of a skew-Hermitian matrix in an orthonormal basis of u(d)."""
    return np.array([np.real(np.vdot(b, a)) for b in _skew_basis(a.shape[0])])


def _from_skew_coords(c: np.ndarray, d: int) -> np.ndarray:
    basis = _skew_basis(d)
    return sum(ci * b for ci, b in zip(c, basis))


_BASIS_CACHE: dict[int, list[np.ndarray]] = {}


def _skew_basis(d: int) -> list[np.ndarray]:
    """Orthonormal basis of the skew-Hermitian d x d matrices, <A,B> = Re tr(A* B)."""
    if d in _BASIS_CACHE:
        return _BASIS_CACHE[d]
    basis = []
    for j in range(d):
        e = np.zeros((d, d), dtype=complex)
        e[j, j] = 1j
        basis.append(e)
    s = 1.0 / np.sqrt(2.0)
    for j in range(d):
        for k in range(j + 1, d):
            e = np.zeros((d, d), dtype=complex)
            e[j, k], e[k, j] = s, -s
            basis.append(e)
            e = np.zeros((d, d), dtype=complex)
            e[j, k], e[k, j] = 1j * s, 1j * s
            basis.append(e)
    _BASIS_CACHE[d] = basis
    return basis


def distance(g: GroupElement, h: GroupElement) -> float:
    """Right-invariant distance d(g, h) = d(g h^-1, e)."""
    _check_same(g, h)
    if isinstance(g, RealVec):
        return float(np.linalg.norm(g.values - h.values))
    if isinstance(g, Circle):
        t = abs(g.angle - h.angle)
        return min(t, 1.0 - t)
    w = g.matrix @ h.matrix.conj().T
    return float(np.sqrt(np.sum(_unitary_log_angles(w) ** 2)))


@dataclass(frozen=True)
class GroupMetric:
    """Callable wrapper around :func:`distance` for one group variant."""

    variant: str
    tolerance: float = 1e-10

    def __call__(self, g: GroupElement, h: GroupElement) -> float:
        if type(g).__name__ != self.variant:
            raise GroupMismatchError(f"metric for {self.variant} applied to {type(g).__name__}")
        return distance(g, h)

    def norm(self, g: GroupElement) -> float:
        return distance(g, identity_like(g))


def ad_norm(g: GroupElement) -> float:
    """Operator norm of Ad(g) on the Lie algebra."""
    if isinstance(g, (RealVec, Circle)):
        return 1.0
    d = g.dim
    basis = _skew_basis(d)
    m = g.matrix
    mi = m.conj().T
    cols = [_skew_coords(m @ b @ mi) for b in basis]
    op = np.column_stack(cols)
    return float(np.linalg.svd(op, compute_uv=False)[0])


def random_unitary(d: int, rng: np.random.Generator) -> Unitary:
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return Unitary(q * ph, check=False)


# ---------------------------------------------------------------- cocycles

def cocycle_product(phi, orbit: Sequence[float], fmap=None, tol: float = 1e-9) -> GroupElement:
    """phi_n(x) = phi(f^{n-1} x) ... phi(f x) phi(x) for orbit = (x, f x, ..., f^{n-1} x).

    ``phi`` is any object with ``__call__(x)`` and ``identity()``.  When
    ``fmap`` is given the orbit is checked step by step.
    """
    orbit = list(orbit)
    if fmap is not None:
        for i in range(1, len(orbit)):
            r = abs(fmap(orbit[i - 1]) - orbit[i])
            if r > tol:
                raise OrbitInconsistencyError(i, r)
    acc = phi.identity()
    for x in orbit:
        acc = multiply(phi(x), acc)
    return acc


def growth_rate_mu_u(phi, fmap, sample_count: int = 100, N: int = 16, seed: int = 0):
    """Sampled estimate of mu_u = lim (sup_x ||Ad(phi_n(x))||)^(1/n).

    Returns ``(estimate, sequence)`` where ``sequence[n-1]`` is the sampled
    max of ||Ad(phi_n(x))||^(1/n).
    """
    if N < 8 or sample_count < 100:
        raise ValueError("need N >= 8 and sample_count >= 100")
    rng = np.random.default_rng(seed)
    lo, hi = fmap.interval
    xs = lo + (hi - lo) * rng.random(sample_count)
    seq = np.zeros(N)
    for x in xs:
        acc = phi.identity()
        for n in range(1, N + 1):
            acc = multiply(phi(x), acc)
            x = fmap(x)
            seq[n - 1] = max(seq[n - 1], ad_norm(acc) ** (1.0 / n))
    return float(seq[-1]), seq


def reduce_transfer_to_coboundary(phi1, phi2):
    """Cocycle theta(x): A -> phi2(x) A phi1(x)^* acting on vec(A) (column-major).

    A transfer function psi(fx) phi1(x) = phi2(x) psi(x) is the same thing as
    vec(psi)(fx) = theta(x) vec(psi)(x).
    """
    from .livsic.cocycle import Cocycle

    def theta(x):
        a, b = phi1(x), phi2(x)
        if not isinstance(a, Unitary) or not isinstance(b, Unitary):
            raise GroupMismatchError("transfer reduction needs unitary cocycles")
        if a.dim != b.dim:
            raise GroupMismatchError(f"dimension mismatch: {a.dim} vs {b.dim}")
        return Unitary(np.kron(a.matrix.conj(), b.matrix), check=False)

    d = phi1.identity().dim
    if phi2.identity().dim != d:
        raise GroupMismatchError("cocycles must share the matrix dimension")
    return Cocycle(
        theta,
        identity=Unitary(np.eye(d * d), check=False),
        holder_exponent=min(phi1.holder_exponent, phi2.holder_exponent),
        holder_coefficient=phi1.holder_coefficient + phi2.holder_coefficient,
    )


def vec(a: np.ndarray) -> np.ndarray:
    return np.asarray(a).reshape(-1, order="F")


def unvec(v: np.ndarray, d: int) -> np.ndarray:
    return np.asarray(v).reshape((d, d), order="F")


@dataclass(frozen=True)
class TwistSpec:
    """exp(i alpha) chi(.) twist; ``phase`` is alpha in turns."""

    phase: float
    character: Callable[[GroupElement], Circle]
    representation_dim: int = 1


def trivial_character(g: GroupElement) -> Circle:
    return Circle(0.0)


def winding_character(k: int) -> Callable[[GroupElement], Circle]:
    """chi(g) = k g on the circle (or on the first coordinate of a RealVec mod 1)."""

    def chi(g):
        if isinstance(g, Circle):
            return Circle(k * g.angle)
        if isinstance(g, RealVec):
            return Circle(k * g.values[0])
        raise GroupMismatchError("winding character is defined on Circle/RealVec")

    return chi


def determinant_character(g: GroupElement) -> Circle:
    if not isinstance(g, Unitary):
        raise GroupMismatchError("determinant character needs a unitary element")
    return Circle(np.angle(np.linalg.det(g.matrix)) / (2 * np.pi))


def twisted_cocycle(phi, twist: TwistSpec):
    """Circle cocycle x -> alpha + chi(phi(x)); turns the twisted equation into a coboundary one."""
    from .livsic.cocycle import Cocycle

    return Cocycle(
        lambda x: Circle(twist.phase + twist.character(phi(x)).angle),
        identity=Circle(0.0),
        holder_exponent=getattr(phi, "holder_exponent", 1.0),
        holder_coefficient=getattr(phi, "holder_coefficient", float("inf")),
    )
