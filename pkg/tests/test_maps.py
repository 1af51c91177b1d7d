import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from livsiclab.dynamics.maps import (
    DensityUnavailableError,
    HistogramDensity,
    builtin,
    estimate_density,
    map_from_json,
)

import oracles


@pytest.mark.parametrize("name,params,ref", [
    ("doubling", {}, oracles.doubling),
    ("tent", {"slope": 1.7}, oracles.tent(1.7)),
    ("quadratic", {"a": 1.8}, oracles.quad(1.8)),
    ("mp", {"p": 0.5}, oracles.mp(0.5)),
])
def test_forward_matches_oracle(name, params, ref):
    f = builtin(name, **params)
    lo, hi = f.interval
    for x in np.linspace(lo, hi, 101)[:-1]:
        assert f(x) == pytest.approx(ref(x), abs=1e-14)


@given(st.floats(-1, 1), st.floats(0.2, 2.0))
def test_quadratic_inverse_branches(y, a):
    f = builtin("quadratic", a=a)
    if y < 1 - a:
        return
    for label, x in f.preimages(y):
        assert f(x) == pytest.approx(y, abs=1e-12)
        assert f.branch_index(x) == label or abs(x) < 1e-12


@given(st.floats(0, 1, exclude_max=True), st.floats(0.1, 2.0))
def test_mp_inverse_branches(y, p):
    f = builtin("mp", p=p)
    pre = f.preimages(y)
    assert len(pre) == 2
    for _, x in pre:
        assert f(x) == pytest.approx(y, abs=1e-10)


@pytest.mark.parametrize("y", [5e-324, 1e-315, 1e-311, 1e-300])
def test_mp_inverse_terminates_on_subnormal(y):
    f = builtin("mp", p=0.7)
    for _, x in f.preimages(y):
        assert f(x) == pytest.approx(y, abs=1e-10)


def test_branch_structure_and_derivative():
    f = builtin("tent", slope=2.0)
    assert f.n_branches == 2
    assert f.breakpoints == [0.0, 0.5, 1.0]
    assert f.derivative(0.25) == 2.0 and f.derivative(0.75) == -2.0
    q = builtin("quadratic", a=2.0)
    assert q.derivative(0.3) == pytest.approx(-1.2)


def test_invalid_parameters():
    with pytest.raises(ValueError):
        builtin("tent", slope=2.5)
    with pytest.raises(ValueError):
        builtin("quadratic", a=2.1)
    with pytest.raises(ValueError):
        builtin("nope")


def test_densities():
    q = builtin("quadratic", a=2.0)
    assert q.density.measure(-1, 1) == pytest.approx(1.0)
    # arcsine cdf: 1/2 + arcsin(x)/pi
    assert q.density.measure(-1, 0.5) == pytest.approx(0.5 + math.asin(0.5) / math.pi)
    with pytest.raises(DensityUnavailableError):
        builtin("quadratic", a=1.7).require_density()


def test_arcsine_is_invariant():
    q = builtin("quadratic", a=2.0)
    rng = np.random.default_rng(0)
    x = q.density.sample(rng, 200000)
    fx = q(x)
    for a, b in [(-1, -0.5), (-0.2, 0.3), (0.7, 1.0)]:
        assert np.mean((fx >= a) & (fx < b)) == pytest.approx(q.density.measure(a, b), abs=5e-3)


def test_estimated_density_histogram(tmp_path):
    f = estimate_density(builtin("quadratic", a=2.0), bins=64, iters=200000, seed=1)
    d = f.density
    assert isinstance(d, HistogramDensity)
    assert d.measure(-1, 1) == pytest.approx(1.0)
    assert d.measure(-0.1, 0.1) == pytest.approx(builtin("quadratic", a=2.0).density.measure(-0.1, 0.1), abs=0.01)
    path = tmp_path / "h.csv"
    d.to_csv(path)
    back = HistogramDensity.from_csv(path)
    assert np.array_equal(back.values, d.values)
    assert path.read_text().splitlines()[0] == "bin_left,bin_right,density"


def test_json_roundtrip():
    f = builtin("tent", slope=1.6)
    doc = json.loads(f.to_json())
    assert doc["name"] == "tent" and doc["params"] == {"slope": 1.6}
    g = map_from_json(f.to_json())
    assert g(0.3) == f(0.3)
