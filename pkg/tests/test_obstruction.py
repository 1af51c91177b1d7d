import math

import pytest

from livsiclab.dynamics.maps import builtin
from livsiclab.dynamics.orbits import mean_log_derivative
from livsiclab.livsic.cocycle import log_derivative_cocycle, real_cocycle
from livsiclab.livsic.obstruction import periodic_obstruction


def test_chebyshev_consistent_through_period_8():
    q = builtin("quadratic", a=2.0)
    rep = periodic_obstruction(log_derivative_cocycle(q, math.log(2)), q, 8)
    assert rep.consistent and rep.max_residual < 1e-8
    # the boundary fixed point -1 has multiplier 4 and is excluded
    assert rep.excluded == 1
    full = periodic_obstruction(log_derivative_cocycle(q, math.log(2)), q, 1, interior_only=False)
    assert full.max_residual == pytest.approx(math.log(2), abs=1e-12)


@pytest.mark.parametrize("a", [1.54368901, 1.6, 1.9])
def test_obstructed_parameters(a):
    f = builtin("quadratic", a=a)
    lam, _ = mean_log_derivative(f, N=1_000_000)
    rep = periodic_obstruction(log_derivative_cocycle(f, lam), f, 2, tol=1e-6)
    assert rep.verdict == "obstructed" and rep.max_up_to(2) > 0.01


def test_coboundary_of_doubling_has_trivial_cycles():
    f = builtin("doubling")
    u = lambda x: math.cos(2 * math.pi * x) + x ** 3
    phi = real_cocycle(lambda x: u(float(f(x))) - u(x))
    rep = periodic_obstruction(phi, f, 10)
    assert rep.max_residual < 1e-9


def test_constant_cocycle_counts_period():
    f = builtin("tent", slope=2.0)
    rep = periodic_obstruction(real_cocycle(lambda x: 0.1), f, 5)
    for r in rep.rows:
        assert r.residual == pytest.approx(0.1 * r.period, rel=1e-12)


def test_period_range_and_csv(tmp_path):
    f = builtin("doubling")
    with pytest.raises(ValueError):
        periodic_obstruction(real_cocycle(lambda x: 0.0), f, 13)
    rep = periodic_obstruction(real_cocycle(lambda x: 0.0), f, 3)
    rep.to_csv(tmp_path / "o.csv")
    lines = (tmp_path / "o.csv").read_text().splitlines()
    assert lines[0] == "period,representative,residual" and len(lines) == 1 + len(rep.rows)
