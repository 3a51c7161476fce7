import os
import subprocess
import sys

import numpy as np
import pytest

from mlfrac import BACKEND
from mlfrac._backend import get_backend
from mlfrac.motion import _cumulative, _draw_events, orthogonal_motion, three_direction_motion
from mlfrac.special import _coeffs, _log_denominators, _log_majorant

py = get_backend("python")
try:
    cy = get_backend("cython")
except ImportError:
    cy = None

needs_compiled = pytest.mark.skipif(cy is None, reason="compiled kernels not built")


def series_args(nu, delta, spec, radius, n=500, seed=0):
    K = 512
    rng = np.random.default_rng(seed)
    w = radius * np.sqrt(rng.random(n)) * np.exp(2j * np.pi * rng.random(n))
    return (_coeffs(spec, K), _log_denominators(nu, complex(delta), K), _log_majorant(2.0, K), w, 3,
            1e-14, 1e-12)


def test_python_backend_selectable():
    assert py.NAME == "python"
    assert BACKEND in ("python", "cython")


@needs_compiled
@pytest.mark.parametrize("nu,delta,spec,radius", [
    (0.8, 1.0, ("ones",), 2.0),
    (1.5, 0.3 + 0.5j, ("ones",), 5.0),
    (0.6, 2.0, ("prab", 2.0 + 0j), 1.5),
    (1.0, 1.0, ("multi", (1, 2), (-1 + 0j, 0.5j)), 1.0),
])
def test_series_parity(nu, delta, spec, radius):
    args = series_args(nu, delta, spec, radius)
    a, b = py.series_sum(*args), cy.series_sum(*args)
    assert np.allclose(a[0], b[0], rtol=1e-13, atol=1e-15)
    assert np.array_equal(a[2], b[2]) and np.array_equal(a[3], b[3])
    assert np.allclose(a[1], b[1], rtol=1e-10)


@needs_compiled
@pytest.mark.parametrize("spec", [orthogonal_motion(2.0, 1.0), three_direction_motion(1.5, 1.0)])
def test_motion_parity(spec):
    t = 1.7
    counts, offsets, epochs, _, su, iu = _draw_events(spec, t, 20000, np.random.default_rng(3))
    args = (counts, offsets, epochs, su, iu, _cumulative(spec.initial_dist), _cumulative(spec.switch_matrix),
            np.asarray(spec.velocities), t)
    assert np.allclose(py.motion_positions(*args), cy.motion_positions(*args), atol=1e-13)


def test_env_override():
    code = "import mlfrac; print(mlfrac.BACKEND)"
    env = dict(os.environ, MLFRAC_BACKEND="python")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
