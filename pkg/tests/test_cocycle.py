import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from livsiclab.dynamics.maps import builtin
from livsiclab.groups import Circle, RealVec
from livsiclab.livsic.cocycle import (
    ArrayEps,
    Cocycle,
    GeometricEps,
    InverseLogEps,
    PowerEps,
    Singularity,
    log_derivative_cocycle,
    real_cocycle,
)


def test_real_cocycle_and_identity():
    c = real_cocycle(lambda x: 3 * x, holder_coefficient=3.0)
    assert c(0.5).values[0] == 1.5
    assert c.identity().values[0] == 0.0
    assert c.check_holder([0.1, 0.2], [0.3, 0.9]) <= 1.0


def test_holder_exponent_range():
    with pytest.raises(ValueError):
        Cocycle(lambda x: Circle(x), identity=Circle(0), holder_exponent=0.0)
    with pytest.raises(ValueError):
        Cocycle(lambda x: Circle(x), identity=Circle(0), holder_exponent=1.5)


def test_log_derivative_cocycle():
    q = builtin("quadratic", a=2.0)
    phi = log_derivative_cocycle(q, math.log(2))
    assert phi(0.5).values[0] == pytest.approx(0.0)
    assert phi(0.25).values[0] == pytest.approx(-math.log(2))
    assert phi(0.0).values[0] == -math.inf
    assert phi.singularity.kind == "log" and phi.singularity.points == (0.0,)
    assert log_derivative_cocycle(builtin("doubling")).singularity.kind == "none"


@given(st.floats(1.01, 10), st.floats(0.01, 3), st.integers(1, 10_000))
def test_geometric_eps(lam, beta, n):
    e = GeometricEps(lam, beta)
    assert e.log_inv(n) == pytest.approx(beta * n * math.log(lam))


@given(st.floats(0.5, 4), st.integers(1, 10_000))
def test_power_and_log_eps(k, n):
    assert PowerEps(k).value(n) == pytest.approx(n ** -k)
    assert InverseLogEps().value(n) == pytest.approx(1 / math.log(n + 1))


def test_array_eps_validation():
    e = ArrayEps([0.5, 0.25, 0.25])
    assert len(e) == 3 and e.value(2) == 0.25 and not e.closed_form
    with pytest.raises(ValueError):
        ArrayEps([0.1, 0.2])
    with pytest.raises(ValueError):
        ArrayEps([0.0])
    with pytest.raises(TypeError):
        len(PowerEps(2))


def test_singularity_kinds():
    with pytest.raises(ValueError):
        Singularity("weird")
    with pytest.raises(ValueError):
        Singularity.pole([0.0], 0.0, PowerEps(2))
    assert Singularity.bounded([0.5]).kind == "bounded"
    assert Singularity.none().kind == "none"
