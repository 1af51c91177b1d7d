import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from livsiclab.dynamics.maps import builtin
from livsiclab.livsic.cocycle import ArrayEps, GeometricEps, InverseLogEps, PowerEps, Singularity
from livsiclab.livsic.regularity import (
    HypothesisViolated,
    borel_cantelli_avoidance,
    holder_exponent_estimate,
    martingale_density_check,
    mp_regularity_gate,
    ph_check,
    singular_alpha_tilde,
    singular_effective_exponent,
)


def test_ph_check():
    assert ph_check(1.0, 2.0, 0.5).ok
    r = ph_check(1.5, 2.0, 0.5)
    assert not r.ok and r.rate == pytest.approx(math.sqrt(2))
    assert ph_check(1.1, 2.0, 1.0, R=2).rate == pytest.approx(math.sqrt(2))
    with pytest.raises(ValueError):
        ph_check(0.5, 2.0, 0.5)


@given(st.floats(0.2, 1.0), st.floats(0.5, 5.0))
def test_holder_fit_recovers_power_law(alpha, c):
    rng = np.random.default_rng(0)
    x = rng.random(400)
    r = 10 ** rng.uniform(-6, -1, 400)
    s = np.column_stack([x, x + r, c * r ** alpha])
    fit = holder_exponent_estimate(s)
    assert fit.alpha_hat == pytest.approx(alpha, abs=1e-8)
    assert fit.coefficient == pytest.approx(c, rel=1e-6)
    assert fit.r2 > 0.999 and not fit.low_confidence


def test_holder_fit_low_confidence_when_range_is_narrow():
    x = np.linspace(0, 1, 50)
    s = np.column_stack([x, x + 0.01 * (1 + x), (0.01 * (1 + x)) ** 0.5])
    assert holder_exponent_estimate(s).low_confidence


@given(st.floats(1.1, 5.0), st.floats(0.01, 0.9))
def test_alpha_tilde_geometric_log_case(lam, beta):
    at, _ = singular_alpha_tilde(Singularity.log([0.0], GeometricEps(lam, beta)), lam)
    assert at == pytest.approx(beta, abs=1e-6)


@given(st.floats(1.1, 5.0), st.floats(0.01, 0.4), st.floats(0.1, 1.0))
def test_alpha_tilde_geometric_pole_case(lam, beta, p):
    at, _ = singular_alpha_tilde(Singularity.pole([0.0], p, GeometricEps(lam, beta)), lam)
    assert at == pytest.approx((p + 1) * beta, abs=1e-6)


def test_alpha_tilde_polynomial_radii_vanish():
    at, win = singular_alpha_tilde(Singularity.log([0.0], PowerEps(2.0)), 2.0)
    assert at < 1e-6 and win[1] == int(1e12)


def test_alpha_tilde_array_uses_last_half():
    n = np.arange(1, 201)
    eps = ArrayEps(2.0 ** (-0.3 * n))
    at, win = singular_alpha_tilde(Singularity.log([0.0], eps), 2.0)
    assert at == pytest.approx(0.3) and win == (101, 200)
    with pytest.raises(ValueError):
        singular_alpha_tilde(Singularity.log([0.0], ArrayEps([0.5] * 10)), 2.0)


def test_effective_exponent_and_violation():
    se = singular_effective_exponent(Singularity.log([0.0], GeometricEps(2.0, 0.3)), 2.0, 0.05)
    assert se.exponent == pytest.approx(0.65, abs=1e-6)
    with pytest.raises(HypothesisViolated):
        singular_effective_exponent(Singularity.pole([0.0], 1.0, GeometricEps(2.0, 0.6)), 2.0, 0.05)


def test_borel_cantelli_summable_and_divergent():
    q = builtin("quadratic", a=2.0)
    r4 = borel_cantelli_avoidance(q, 0.0, PowerEps(4.0), orbits=300, length=100)
    assert r4.cauchy and r4.quantile(0.99) <= 5
    r2 = borel_cantelli_avoidance(q, 0.0, PowerEps(2.0), orbits=300, length=100)
    assert r2.cauchy and r2.tail_estimate < 1e-2
    assert r2.partial_sums[-1] == pytest.approx(r2.summable_estimate - r2.tail_estimate)
    rl = borel_cantelli_avoidance(q, 0.0, InverseLogEps(), orbits=100, length=100)
    assert not rl.cauchy and math.isinf(rl.tail_estimate)


def test_borel_cantelli_needs_point_in_interval():
    with pytest.raises(ValueError):
        borel_cantelli_avoidance(builtin("quadratic", a=2.0), 3.0, PowerEps(2.0))


@given(st.floats(0.05, 4.0), st.floats(0.01, 1.0))
def test_mp_gate_threshold(p, alpha):
    assert mp_regularity_gate(p, alpha) == (alpha > p / (1 + p))


def test_martingale_density_check():
    phi = lambda x: np.sin(2 * np.pi * x)
    r = martingale_density_check(phi, [8, 12], 0.1)
    assert r.proportion >= 0.99 and set(r.per_depth) == {8, 12}
    # a fine-scale oscillation defeats shallow cells
    wild = lambda x: np.sin(2 * np.pi * 4096 * x)
    assert martingale_density_check(wild, [4], 0.1).proportion < 0.5
