import importlib
import math
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, strategies as st

from livsiclab import kernels
from livsiclab import _pykernels as py

compiled = kernels.compiled_backend
needs_c = pytest.mark.skipif(compiled is None, reason="compiled extension not built")

CASES = [(kernels.DOUBLING, 0.0, 0.1234), (kernels.TENT, 1.7, 0.31), (kernels.QUADRATIC, 1.8, 0.27),
         (kernels.MP, 0.5, 0.61), (kernels.MP, 1.0, 0.2)]


def test_backend_is_reported():
    assert kernels.BACKEND in ("cython", "python")


@needs_c
@pytest.mark.parametrize("kind,p,x0", CASES)
def test_birkhoff_parity(kind, p, x0):
    a = compiled.birkhoff_log_derivative(kind, p, x0, 10, 20000)
    b = py.birkhoff_log_derivative(kind, p, x0, 10, 20000)
    assert a[0] == pytest.approx(b[0], rel=1e-12)


@needs_c
@pytest.mark.parametrize("kind,p,x0", CASES)
def test_histogram_parity(kind, p, x0):
    lo, hi = (-1.0, 1.0) if kind == kernels.QUADRATIC else (0.0, 1.0)
    a = compiled.orbit_histogram(kind, p, x0, 10, 5000, lo, hi, 64)
    b = py.orbit_histogram(kind, p, x0, 10, 5000, lo, hi, 64)
    # identical arithmetic; chaotic divergence only after ~50 steps of rounding noise
    assert a.sum() == b.sum() == 5000


@needs_c
@given(st.floats(1e-12, 1.0), st.floats(0.05, 3.0))
def test_mp_inverse_parity(y, p):
    a = compiled.mp_left_inverse(y, p)
    b = py.mp_left_inverse(y, p)
    assert a == pytest.approx(b, rel=1e-12, abs=1e-300)


@needs_c
def test_forward_parity_exact():
    for kind, p, x in CASES:
        assert compiled.forward(kind, p, x) == py.forward(kind, p, x)


@needs_c
def test_hofbauer_occupation_parity():
    trans = np.array([[1, 1], [1, 1]], dtype=np.int64)
    br = np.array([0.5])
    a = compiled.hofbauer_occupation(kernels.TENT, 2.0, trans, br, 0, 0.3, 200)
    b = py.hofbauer_occupation(kernels.TENT, 2.0, trans, br, 0, 0.3, 200)
    assert np.array_equal(a[0], b[0]) and a[1] == b[1]


@needs_c
def test_preimage_chain_parity():
    a = compiled.mp_left_preimages(1.0, 0.5, 500)
    b = py.mp_left_preimages(1.0, 0.5, 500)
    assert np.allclose(a, b, rtol=1e-11)
    ys = np.linspace(0.01, 0.99, 7)
    assert np.allclose(compiled.mp_left_inverse_array(ys, 0.5), py.mp_left_inverse_array(ys, 0.5), rtol=1e-12)


@given(st.floats(1e-9, 1.0), st.floats(0.1, 2.0))
def test_mp_inverse_is_inverse(y, p):
    x = kernels.mp_left_inverse(y, p)
    assert 0 <= x <= 0.5
    assert x + 2 ** p * x ** (1 + p) == pytest.approx(y, rel=1e-10)


def test_pure_python_selected_by_env():
    code = "from livsiclab import kernels; print(kernels.BACKEND)"
    env = dict(os.environ, LIVSIC_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_doubling_birkhoff_exact():
    s, _ = kernels.birkhoff_log_derivative(kernels.DOUBLING, 0.0, 0.1, 0, 1000)
    assert s / 1000 == pytest.approx(math.log(2), rel=1e-12)


def test_benchmark_smoke(capsys):
    import importlib.util
    import pathlib

    path = pathlib.Path(__file__).parents[1] / "benchmarks" / "bench_kernels.py"
    spec = importlib.util.spec_from_file_location("bench_kernels", path)
    mod = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(mod)
    rc = mod.main(["--scale", "0.01", "--repeat", "1"])
    out = capsys.readouterr().out
    assert rc == (0 if compiled is not None else 1)
    if compiled is not None:
        assert "speed-up" in out and len(out.splitlines()) == 6
