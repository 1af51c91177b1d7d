"""Independent reference computations.

Nothing here imports livsiclab: every oracle works from closed forms,
polynomial roots or brute-force enumeration so that agreement with the
package is evidence rather than tautology.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.optimize import brentq


# ---------------------------------------------------------------- maps

def quad(a):
    return lambda x: 1.0 - a * x * x


def tent(s):
    return lambda x: s * x if x < 0.5 else s * (1.0 - x)


def doubling(x):
    return (2.0 * x) % 1.0


def mp(p):
    c = 2.0 ** p
    return lambda x: x + c * x ** (1.0 + p) if x < 0.5 else 2.0 * x - 1.0


# ---------------------------------------------------------------- periodic points

def quadratic_period2(a):
    """Period-2 points of 1 - a x^2 from the quadratic factor of f(f(x)) - x.

    f(f(x)) - x = -(a x^2 + x - 1)(a^2 x^2 - a x + 1 - a); the second
    factor gives the 2-cycle, real when a > 3/4.
    """
    r = np.roots([a * a, -a, 1.0 - a])
    return tuple(sorted(float(v.real) for v in r))


def quadratic_fixed_points(a):
    r = np.roots([a, 1.0, -1.0])
    return tuple(sorted(float(v.real) for v in r))


def doubling_periodic_count(n):
    """Number of points of prime period n for x -> 2x mod 1 (Möbius inversion of 2^n - 1)."""
    def mu(k):
        res, m, d = 1, k, 2
        while d * d <= m:
            if m % d == 0:
                m //= d
                if m % d == 0:
                    return 0
                res = -res
            d += 1
        return -res if m > 1 else res

    return sum(mu(n // d) * (2 ** d - 1) for d in range(1, n + 1) if n % d == 0)


def chebyshev_cycle_multiplier(n):
    """|(f^n)'| on any interior n-cycle of 1 - 2x^2."""
    return 2.0 ** n


# ---------------------------------------------------------------- Chebyshev conjugacy

def chebyshev_psi(x):
    """Solution of psi(f x) - psi(x) = log|f'(x)| - log 2 for f = 1 - 2x^2."""
    return 0.5 * np.log(1.0 - np.asarray(x) ** 2)


def arcsine_mean_log_derivative():
    """int log|4x| d(arcsine) by quadrature in the angle variable."""
    from scipy.integrate import quad as integrate

    f = lambda t: math.log(abs(4.0 * math.cos(math.pi * t)))
    pts = [0.5]
    return integrate(f, 0.0, 1.0, points=pts, limit=200)[0]


# ---------------------------------------------------------------- Manneville-Pomeau

def mp_left_preimage_chain(p, y0, n):
    """Successive left-branch preimages by bracketing root-finding."""
    c = 2.0 ** p
    out = np.empty(n)
    y = y0
    for k in range(n):
        y = brentq(lambda x: x + c * x ** (1.0 + p) - y, 0.0, min(y, 0.5), xtol=1e-300, rtol=1e-15)
        out[k] = y
    return out


def mp_asymptotic_preimage(p, n):
    """x_n ~ (1/2) (p n)^(-1/p) for the left-branch chain."""
    return 0.5 * (p * n) ** (-1.0 / p)


# ---------------------------------------------------------------- Hofbauer brute force

def _quadratic_pieces(a):
    return [(-1.0, 0.0), (0.0, 1.0)], quad(a)


def _tent_pieces(s):
    return [(0.0, 0.5), (0.5, 1.0)], tent(s)


def hofbauer_brute_force(kind, param, depth, tol=1e-9):
    """Count of distinct closures of T^n(Z) over all n-cylinders Z, 1 <= n <= depth, plus the base.

    Every admissible word is enumerated separately (no sharing of states);
    images of monotone pieces are the hulls of the endpoint images.
    """
    if kind == "quadratic":
        cells, f = _quadratic_pieces(param)
    elif kind == "tent":
        cells, f = _tent_pieces(param)
    else:
        raise ValueError(kind)
    found = []

    def record(iv):
        for g in found:
            if abs(g[0] - iv[0]) <= tol and abs(g[1] - iv[1]) <= tol:
                return
        found.append(iv)

    frontier = [(lo, hi) for lo, hi in cells]
    for n in range(1, depth + 1):
        nxt = []
        for a, b in frontier:
            fa, fb = f(a), f(b)
            img = (min(fa, fb), max(fa, fb))
            record(img)
            if n == depth:
                continue
            for lo, hi in cells:
                c, d = max(img[0], lo), min(img[1], hi)
                if d - c > tol:
                    nxt.append((c, d))
        frontier = nxt
    return 1 + len(found)

