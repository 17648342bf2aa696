import math
import os
import subprocess
import sys

import pytest
from hypothesis import given, settings, strategies as st

from gge_thermo import _kernels_py as py
from gge_thermo import kernels

compiled = kernels.compiled
needs_ext = pytest.mark.skipif(compiled is None, reason="compiled extension not built")


def test_backend_name():
    assert kernels.BACKEND in ("cython", "python")


def test_pure_python_env_override():
    code = "from gge_thermo import kernels; print(kernels.BACKEND)"
    env = dict(os.environ, GGE_THERMO_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


@pytest.mark.parametrize("x", [-800.0, -3.0, 0.0, 2.5, 800.0])
def test_excited_population_stable(x):
    p = py.excited_population(x)
    assert 0.0 <= p <= 1.0
    assert p == pytest.approx(1.0 / (1.0 + math.exp(x)) if abs(x) < 700 else (0.0 if x > 0 else 1.0))


@needs_ext
@settings(max_examples=60, deadline=None)
@given(st.floats(0, 20), st.floats(1e-4, 0.5), st.integers(0, 2000))
def test_raise_level_equivalence(x0, dx, n):
    a = compiled.raise_level(x0, dx, n, 0.0, 10**8)
    b = py.raise_level(x0, dx, n, 0.0)
    assert a[1] == b[1]
    assert a[0] == pytest.approx(b[0], rel=1e-13, abs=1e-300)
    assert a[2] == pytest.approx(b[2], rel=1e-15)


@needs_ext
@settings(max_examples=40, deadline=None)
@given(st.floats(0, 5), st.floats(1e-3, 0.5), st.floats(1e-12, 1e-3))
def test_raise_level_tail_equivalence(x0, dx, tol):
    a = compiled.raise_level(x0, dx, -1, tol, 10**8)
    b = py.raise_level(x0, dx, -1, tol)
    assert a[1] == b[1]
    assert a[0] == pytest.approx(b[0], rel=1e-13)
    assert a[3] < tol


@needs_ext
@settings(max_examples=60, deadline=None)
@given(st.floats(0.01, 60), st.floats(0.1, 10), st.floats(1e-14, 1e-6))
def test_series_equivalence(alpha, hbar, tol):
    a = compiled.spin_bath_series(alpha, hbar, tol, 10**8)
    b = py.spin_bath_series(alpha, hbar, tol)
    assert a[1] == b[1]
    assert a[0] == pytest.approx(b[0], rel=1e-14)


def test_raise_level_riemann_sum():
    # left Riemann sum of the Fermi function, summed by hand
    dx, n = 0.25, 8
    expect = sum(py.excited_population(k * dx) * dx for k in range(n))
    work, k, x, _ = kernels.raise_level(0.0, dx, n, 0.0)
    assert work == pytest.approx(expect, rel=1e-15)
    assert k == n and x == pytest.approx(2.0)


@pytest.mark.parametrize("mod", [py, pytest.param(compiled, marks=needs_ext)], ids=["python", "compiled"])
def test_kernel_errors(mod):
    with pytest.raises(ValueError):
        mod.raise_level(0.0, 0.0, 5, 0.0, 10)
    with pytest.raises(ValueError):
        mod.spin_bath_series(-1.0, 1.0, 1e-10, 10)
    with pytest.raises(RuntimeError):
        mod.raise_level(0.0, 1e-3, -1, 1e-8, 10)
