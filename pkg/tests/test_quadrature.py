import math

import numpy as np
import pytest

from mlfrac.quadrature import GAUSS_WEIGHTS, KRONROD_WEIGHTS, NODES, QuadratureError, gk15, integrate


def test_weights_sum_to_two():
    assert abs(KRONROD_WEIGHTS.sum() - 2) < 1e-15
    assert abs(GAUSS_WEIGHTS.sum() - 2) < 1e-15
    assert np.allclose(NODES, -NODES[::-1])


@pytest.mark.parametrize("deg", range(0, 23))
def test_kronrod_exact_to_degree_22(deg):
    k, g = gk15(lambda x: x**deg, np.array([0.0]), np.array([1.0]))
    assert abs(k[0] - 1 / (deg + 1)) < 1e-15
    if deg <= 13:
        assert abs(g[0] - 1 / (deg + 1)) < 1e-15


def test_smooth():
    r = integrate(np.exp, 0, 1)
    assert r.converged and abs(r.value - (math.e - 1)) < 1e-14


def test_complex_oscillatory():
    r = integrate(lambda x: np.exp(1j * 20 * x), 0, math.pi, abs_tol=1e-13)
    ref = (np.exp(1j * 20 * math.pi) - 1) / (1j * 20)
    assert abs(r.value - ref) < 1e-12


def test_endpoint_singularity():
    r = integrate(lambda x: x**-0.5, 0, 1, abs_tol=1e-10, rel_tol=1e-10, max_intervals=20000)
    assert abs(r.value - 2) < 1e-8


def test_reversed_and_empty():
    assert integrate(np.sin, 1, 1).value == 0
    a = integrate(np.sin, 0, 2).value
    b = integrate(np.sin, 2, 0).value
    assert a == -b


def test_breakpoints():
    r = integrate(np.abs, -1, 2, breakpoints=(0,))
    assert abs(r.value - 2.5) < 1e-15 and r.intervals == 2


def test_failure_reports_achieved_error():
    with pytest.raises(QuadratureError) as ei:
        integrate(lambda x: np.sin(1 / np.maximum(x, 1e-300)), 0, 1, abs_tol=1e-15, rel_tol=1e-15,
                  max_intervals=50)
    assert ei.value.result.error > 0 and not ei.value.result.converged
    r = integrate(lambda x: np.sin(1 / np.maximum(x, 1e-300)), 0, 1, abs_tol=1e-15, rel_tol=1e-15,
                  max_intervals=50, raise_on_fail=False)
    assert not r.converged


def test_infinite_limits_rejected():
    with pytest.raises(ValueError):
        integrate(np.exp, 0, np.inf)
