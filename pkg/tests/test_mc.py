import numpy as np
import pytest

from mlfrac.mc import MCEstimate, max_threads, monte_carlo
from mlfrac.motion import empirical_cf, orthogonal_motion


def draw_normal(rng, size):
    return rng.standard_normal(size) + 1j * rng.standard_normal(size)


def test_thread_count_does_not_change_result():
    res = [monte_carlo(draw_normal, 300_000, seed=42, threads=n) for n in (1, 2, 5)]
    assert all(r == res[0] for r in res)


def test_env_thread_count(monkeypatch):
    monkeypatch.setenv("MLFRAC_THREADS", "3")
    assert max_threads() == 3
    monkeypatch.setenv("MLFRAC_THREADS", "x")
    with pytest.raises(ValueError):
        max_threads()


def test_seed_recorded_and_reproducible():
    a = monte_carlo(draw_normal, 1000, seed=7)
    b = monte_carlo(draw_normal, 1000, seed=7)
    c = monte_carlo(draw_normal, 1000, seed=8)
    assert a == b and a.estimate != c.estimate and a.seed == 7


def test_standard_error():
    r = monte_carlo(draw_normal, 200_000, seed=1)
    assert abs(r.std_error_re - 1 / np.sqrt(2e5)) < 1e-4
    assert r.within(0.0)


def test_within_zero_spread():
    e = MCEstimate(1 + 0j, 0.0, 0.0, 10)
    assert e.within(1.0) and not e.within(1.001)


def test_bad_draw_shape():
    with pytest.raises(ValueError):
        monte_carlo(lambda rng, size: np.zeros(size + 1), 10, seed=0)
    with pytest.raises(ValueError):
        monte_carlo(draw_normal, 0)


def test_motion_estimates_thread_invariant():
    spec = orthogonal_motion(2.0, 1.0)
    a = empirical_cf(spec, 1.0, [0.7, 0.3], 150_000, seed=3, threads=1)
    b = empirical_cf(spec, 1.0, [0.7, 0.3], 150_000, seed=3, threads=4)
    assert a == b
