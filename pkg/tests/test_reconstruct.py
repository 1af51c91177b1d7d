import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm

from livsiclab.dynamics.maps import builtin
from livsiclab.dynamics.orbits import make_backward_orbit, pull_back, sample_backward_orbit
from livsiclab.groups import Unitary, distance, inverse, multiply
from livsiclab.livsic.cocycle import Cocycle, log_derivative_cocycle, real_cocycle
from livsiclab.livsic.reconstruct import (
    BranchWordMismatch,
    GridFunction,
    ReconstructionError,
    coboundary_residual,
    reconstruct_coboundary_on_grid,
    reconstruct_transfer,
)

import oracles

U_FUNCS = {
    "sin": lambda x: math.sin(2 * math.pi * x),
    "square": lambda x: x * x,
    "piecewise": lambda x: x if x < 0.5 else 1.0 - x * x,
}


def manufactured(fmap, u):
    return real_cocycle(lambda x: u(float(fmap(x))) - u(x))


def dyadic_grid(n=64):
    return np.arange(n) / n


@pytest.mark.parametrize("name", sorted(U_FUNCS))
def test_manufactured_coboundaries_recovered(name):
    f = builtin("doubling")
    u = U_FUNCS[name]
    grid = dyadic_grid()
    ref = 0.5
    psi = reconstruct_coboundary_on_grid(manufactured(f, u), f, ref, grid, seed=2)
    err = max(abs(v.values[0] - (u(x) - u(ref))) for x, v in zip(psi.points, psi.values))
    assert err < 1e-6
    assert coboundary_residual(manufactured(f, u), psi, f) < 1e-6


@settings(max_examples=15)
@given(st.integers(0, 10_000), st.floats(0.05, 0.95))
def test_telescoping_inequality_holds_every_step(seed, y0):
    f = builtin("doubling")
    u = U_FUNCS["sin"]
    anchor = sample_backward_orbit(f, 0.37, 120, seed=seed)
    r = reconstruct_transfer(manufactured(f, u), anchor, y0, f, strict=False)
    assert r.telescoping_slack() <= 1e-9


def _unitary_psi():
    h1 = np.array([[1.0, 0.5 - 0.3j], [0.5 + 0.3j, -0.4]])
    h2 = np.array([[0.2, 1j], [-1j, 0.7]])
    return lambda x: Unitary(expm(1j * (0.7 * math.sin(2 * math.pi * x) * h1 + 0.5 * x * x * h2)))


def test_unitary_manufactured_coboundary_and_telescoping():
    f = builtin("doubling")
    psi = _unitary_psi()
    phi = Cocycle(lambda x: multiply(psi(float(f(x))), inverse(psi(x))),
                  identity=Unitary(np.eye(2)))
    anchor = sample_backward_orbit(f, 0.41, 150, seed=4)
    for y0 in (0.05, 0.3, 0.77):
        r = reconstruct_transfer(phi, anchor, y0, f)
        assert r.telescoping_slack() <= 1e-9
        target = multiply(psi(y0), inverse(psi(0.41)))
        assert distance(r.value, target) < 1e-6


def test_chebyshev_grid_matches_explicit_solution():
    q = builtin("quadratic", a=2.0)
    phi = log_derivative_cocycle(q, math.log(2))
    grid = np.linspace(-0.9, 0.9, 33)
    psi = reconstruct_coboundary_on_grid(phi, q, 0.0, grid, seed=0)
    exact = oracles.chebyshev_psi(psi.points) - oracles.chebyshev_psi(0.0)
    got = psi.charts()[:, 0]
    assert np.max(np.abs(got - exact)) < 1e-6


def test_branch_word_mismatch_raised_off_image():
    # the left branch of the slope-1.5 tent only reaches [0, 0.75]
    t = builtin("tent", slope=1.5)
    labels = [0] * 30
    anchor = make_backward_orbit(t, pull_back(t, 0.5, labels), labels)
    with pytest.raises(BranchWordMismatch):
        reconstruct_transfer(real_cocycle(lambda x: x), anchor, 0.9, t)


def test_non_coboundary_fails_to_converge_geometrically():
    # a cocycle with a non-integrable singularity at the neutral point does not telescope
    f = builtin("mp", p=1.0)
    labels = [1] + [0] * 150
    pts = pull_back(f, 0.7, labels)
    anchor = make_backward_orbit(f, pts, labels)
    phi = real_cocycle(lambda x: 1.0 / max(x, 1e-300) ** 0.25)
    with pytest.raises(ReconstructionError):
        reconstruct_transfer(phi, anchor, 0.6, f, tol=1e-12)


def test_grid_function_interpolation_and_csv(tmp_path):
    from livsiclab.groups import RealVec

    g = GridFunction([0.0, 1.0, 0.5], [RealVec([0.0]), RealVec([2.0]), RealVec([1.0])])
    assert list(g.points) == [0.0, 0.5, 1.0]
    assert g(0.25).values[0] == pytest.approx(0.5)
    with pytest.raises(ValueError):
        g(1.5)
    g.to_csv(tmp_path / "g.csv")
    lines = (tmp_path / "g.csv").read_text().splitlines()
    assert lines[0] == "x,psi_1" and lines[2] == "0.5,1"
