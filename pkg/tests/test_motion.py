import math

import numpy as np
import pytest
from conftest import FROZEN, cplx
from scipy import stats

from mlfrac.charpoly import ZeroRootError
from mlfrac.motion import (
    MotionSpec,
    cf_derivative_exact,
    cf_initial_derivative,
    empirical_cf,
    empirical_cf_derivatives,
    exact_cf,
    orthogonal_AB,
    orthogonal_cf_nu1,
    orthogonal_motion,
    orthogonal_problem,
    short_time_cf,
    simulate_path,
    simulate_positions,
    telegraph_decomposition_check,
    telegraph_motion,
    three_direction_coefficients,
    three_direction_motion,
    three_direction_problem,
    three_direction_velocities,
)
from mlfrac.solver import CauchyProblem, solve
from mlfrac.special import PoleError

ORTH = orthogonal_motion(2.0, 1.0)
TRI = three_direction_motion(1.5, 1.0)
ORTH_PTS = FROZEN["motion"]["orthogonal"]
TRI_PTS = FROZEN["motion"]["three_direction"]


def ids(r):
    return f"a={r['alpha']},b={r['beta']},t={r['t']}"


class TestSpec:
    def test_validation(self):
        v = np.eye(2)
        with pytest.raises(ValueError):
            MotionSpec(v, 0.0, [0.5, 0.5], np.full((2, 2), 0.5))
        with pytest.raises(ValueError):
            MotionSpec(v, 1.0, [0.6, 0.5], np.full((2, 2), 0.5))
        with pytest.raises(ValueError):
            MotionSpec(v, 1.0, [0.5, 0.5], [[0.5, 0.4], [0.5, 0.5]])
        with pytest.raises(ValueError):
            MotionSpec(v, 1.0, [1.0], [[1.0]])

    def test_frozen_arrays(self):
        with pytest.raises(ValueError):
            ORTH.velocities[0, 0] = 5.0

    def test_velocities(self):
        assert np.allclose(ORTH.velocities, [[1, 0], [0, 1], [-1, 0], [0, -1]])
        assert np.allclose(three_direction_velocities(2.0), [[2, 0], [-1, math.sqrt(3)], [-1, -math.sqrt(3)]])
        assert TRI.rate == 9 * 1.5 / 4


class TestSimulation:
    def test_t_zero(self):
        x = simulate_positions(ORTH, 0.0, 1000, np.random.default_rng(0))
        assert np.all(x == 0)
        assert np.all(simulate_path(ORTH, 0.0, np.random.default_rng(0)).position == 0)

    def test_single_velocity(self):
        s = MotionSpec([[0.3, -2.0]], 5.0, [1.0], [[1.0]])
        x = simulate_positions(s, 1.7, 100, np.random.default_rng(1))
        assert np.allclose(x, [0.3 * 1.7, -2.0 * 1.7], atol=1e-14)
        assert np.allclose(simulate_path(s, 1.7, np.random.default_rng(1)).position, [0.51, -3.4])

    def test_path_invariant(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            p = simulate_path(ORTH, 3.0, rng)
            edges = np.concatenate([[0], p.switch_times, [3.0]])
            assert np.all(np.diff(edges) > 0)
            assert np.allclose(p.position, np.diff(edges) @ ORTH.velocities[p.velocity_index])

    def test_orthogonal_support(self):
        t = 1.3
        x = simulate_positions(ORTH, t, 100_000, np.random.default_rng(3))
        assert np.all(np.abs(x).sum(axis=1) <= t * (1 + 1e-12))

    def test_three_direction_support(self):
        t = 1.3
        x, y = simulate_positions(TRI, t, 100_000, np.random.default_rng(4)).T
        slack = 1e-12 * t
        assert np.all(x >= -t / 2 - slack) and np.all(x <= t + slack)
        assert np.all(x + math.sqrt(3) * y <= t + slack) and np.all(x - math.sqrt(3) * y <= t + slack)

    def test_batch_matches_path_simulator(self):
        rng = np.random.default_rng(5)
        a = np.array([simulate_path(ORTH, 1.0, rng).position for _ in range(4000)])
        b = simulate_positions(ORTH, 1.0, 4000, rng)
        for j in range(2):
            assert stats.ks_2samp(a[:, j], b[:, j]).pvalue > 1e-3

    def test_multi_time_consistency(self):
        ts = [0.5, 1.0, 2.0]
        x = simulate_positions(ORTH, ts, 20000, np.random.default_rng(6))
        assert x.shape == (3, 20000, 2)
        # increments are bounded by c times the time step
        assert np.all(np.abs(x[1] - x[0]).sum(axis=1) <= 0.5 + 1e-12)
        assert np.all(np.abs(x[2] - x[1]).sum(axis=1) <= 1.0 + 1e-12)

    def test_mean_zero(self):
        x = simulate_positions(ORTH, 1.0, 100_000, np.random.default_rng(7))
        se = x.std(axis=0) / math.sqrt(x.shape[0])
        assert np.all(np.abs(x.mean(axis=0)) < 3 * se)


class TestEmpiricalCF:
    def test_alpha_zero(self):
        e = empirical_cf(ORTH, 1.0, [0.0, 0.0], 1000, seed=1)
        assert e.estimate == 1 and e.std_error == 0

    def test_modulus_bound(self):
        for a in ([1, 1], [3, -2], [0.1, 0.0]):
            e = empirical_cf(TRI, 0.8, a, 5000, seed=2)
            assert abs(e.estimate) <= 1 + 3 * e.std_error

    def test_min_samples(self):
        with pytest.raises(ValueError):
            empirical_cf(ORTH, 1.0, [1, 1], 99)

    def test_alpha_shape(self):
        with pytest.raises(ValueError):
            empirical_cf(ORTH, 1.0, [1, 1, 1], 1000)

    def test_example_point(self):
        e = empirical_cf(ORTH, 1.0, [1, 1], 100_000, seed=3)
        assert e.within(exact_cf(ORTH, 1.0, [1, 1]))


class TestInitialDerivatives:
    SPECS = {
        "orthogonal": ORTH,
        "three": TRI,
        "skewed": MotionSpec([[1.0, 0.2], [-0.5, 1.0], [0.0, -1.5]], 1.7, [0.5, 0.2, 0.3],
                             [[0.1, 0.6, 0.3], [0.5, 0.0, 0.5], [0.2, 0.7, 0.1]]),
    }

    @pytest.mark.parametrize("name", SPECS)
    @pytest.mark.parametrize("alpha", [(0.7, 0.3), (1.0, -2.0)])
    def test_displayed_formulas(self, name, alpha):
        s = self.SPECS[name]
        a = np.asarray(alpha)
        p, P, v, lam = s.initial_dist, s.switch_matrix, s.velocities, s.rate
        mean_v = p @ v
        d1 = 1j * a @ mean_v
        pair = sum(p[h] * P[h, k] * (v[h] + v[k]) for h in range(s.n_states) for k in range(s.n_states))
        d2 = -2 * lam * 1j * a @ mean_v - np.sum(p * (v @ a) ** 2) + lam * 1j * a @ pair
        assert cf_initial_derivative(s, alpha, 0) == 1
        assert abs(cf_initial_derivative(s, alpha, 1) - d1) < 1e-12 * max(1, abs(d1))
        assert abs(cf_initial_derivative(s, alpha, 2) - d2) < 1e-12 * max(1, abs(d2))

    @pytest.mark.parametrize("name", SPECS)
    @pytest.mark.parametrize("n", [0, 1, 2])
    def test_exact_up_to_two(self, name, n):
        s = self.SPECS[name]
        a = cf_initial_derivative(s, (0.7, 0.3), n)
        b = cf_derivative_exact(s, (0.7, 0.3), n)
        assert abs(a - b) < 1e-12 * max(1, abs(b))

    @pytest.mark.parametrize("name", ["orthogonal", "three"])
    def test_third_derivative_symmetric_motions(self, name):
        s = self.SPECS[name]
        a = cf_initial_derivative(s, (0.7, 0.3), 3)
        b = cf_derivative_exact(s, (0.7, 0.3), 3)
        assert abs(a - b) < 1e-12 * max(1, abs(b))

    def test_third_derivative_general_motion(self):
        # first-moment terms at order rate^2 survive for a skewed motion
        s = self.SPECS["skewed"]
        assert abs(cf_initial_derivative(s, (0.7, 0.3), 3) - cf_derivative_exact(s, (0.7, 0.3), 3)) > 0.1

    def test_fourth_derivative_differs(self):
        # two events in [0, t] contribute at order t^2, visible from n = 4 on
        a = cf_initial_derivative(ORTH, (0.7, 0.3), 4)
        b = cf_derivative_exact(ORTH, (0.7, 0.3), 4)
        assert abs(a - b) > 0.1

    def test_orthogonal_conditions(self):
        lam, c, al, be = 2.0, 1.0, 0.7, 0.3
        rho = al**2 + be**2
        want = [1, 0, -(c**2) * rho / 2, lam * c**2 * rho / 2]
        for n, w in enumerate(want):
            assert abs(cf_derivative_exact(ORTH, (al, be), n) - w) < 1e-13

    def test_short_time_expansion(self):
        for t in (1e-2, 5e-3):
            err = abs(short_time_cf(ORTH, (1, 1), t) - exact_cf(ORTH, t, (1, 1)))
            assert err < 5 * (2 * t) ** 2

    def test_finite_differences(self):
        d = empirical_cf_derivatives(ORTH, (0.7, 0.3), 0.005, 200_000, seed=9)
        for n in (1, 2):
            ref = cf_initial_derivative(ORTH, (0.7, 0.3), n)
            r = d[n]
            assert abs(r["estimate"] - ref) <= 3 * r["std_error"] + 3 * r["truncation"] + 1e-12


class TestOrthogonal:
    @pytest.mark.parametrize("row", ORTH_PTS, ids=ids)
    def test_expm_vs_frozen(self, row):
        v = exact_cf(ORTH, row["t"], (row["alpha"], row["beta"]))
        assert abs(v - cplx(row["value"])) < 1e-12

    @pytest.mark.parametrize("row", ORTH_PTS, ids=ids)
    def test_solver_vs_frozen(self, row):
        p = orthogonal_problem(2.0, 1.0, row["alpha"], row["beta"], 1.0)
        assert abs(solve(p)(row["t"]) - cplx(row["value"])) < 1e-9

    @pytest.mark.parametrize("row", [r for r in ORTH_PTS if min(map(abs, orthogonal_AB(2.0, 1.0, r["alpha"], r["beta"]))) > 0],
                             ids=ids)
    def test_closed_form_vs_frozen(self, row):
        v = orthogonal_cf_nu1(2.0, 1.0, row["alpha"], row["beta"], row["t"])
        assert abs(v - cplx(row["value"])) < 1e-10

    def test_product_of_telegraph(self):
        lam, c, t = 2.0, 1.0, 0.9
        tel = telegraph_motion(lam / 2, c / 2)
        for al, be in ((0.7, 0.3), (2.0, 1.0), (0.3, -1.1)):
            prod = exact_cf(tel, t, [al + be]) * exact_cf(tel, t, [al - be])
            assert abs(orthogonal_cf_nu1(lam, c, al, be, t) - prod) < 1e-12

    def test_t_zero(self):
        assert abs(orthogonal_cf_nu1(2.0, 1.0, 0.7, 0.3, 0.0) - 1) < 1e-14

    def test_bound_large_rate(self):
        for t in (1.0, 10.0, 50.0):
            assert abs(orthogonal_cf_nu1(20.0, 1.0, 0.7, 0.3, t)) <= 1 + 1e-12

    def test_resonance(self):
        with pytest.raises(PoleError):
            orthogonal_cf_nu1(2.0, 1.0, 1.0, 1.0, 1.0)
        # B = 0: the four roots collapse to -3 and -1, each double
        p = orthogonal_problem(2.0, 1.0, 1.0, 1.0, 1.0)
        assert p.spectrum.mults == (2, 2)
        assert np.allclose(p.spectrum.roots, [-3, -1], atol=1e-6)
        assert abs(solve(p)(1.0) - exact_cf(ORTH, 1.0, (1, 1))) < 1e-9

    def test_zero_alpha(self):
        with pytest.raises(ZeroRootError):
            orthogonal_problem(2.0, 1.0, 0.0, 0.0, 1.0)

    def test_order_range(self):
        with pytest.raises(ValueError):
            orthogonal_problem(2.0, 1.0, 1.0, 0.5, 1.2)

    @pytest.mark.parametrize("nu,count", [(0.25, 1), (0.4, 2), (0.7, 3), (0.9, 4)])
    def test_condition_counts(self, nu, count):
        assert orthogonal_problem(2.0, 1.0, 0.7, 0.3, nu).n_conds == count

    def test_fractional_is_finite_and_starts_at_one(self):
        s = solve(orthogonal_problem(2.0, 1.0, 0.7, 0.3, 0.6))
        v = s(np.array([0.0, 0.5, 2.0]))
        assert v[0] == 1 and np.all(np.isfinite(v))


class TestThreeDirection:
    @pytest.mark.parametrize("row", TRI_PTS, ids=ids)
    def test_expm_vs_frozen(self, row):
        v = exact_cf(TRI, row["t"], (row["alpha"], row["beta"]))
        assert abs(v - cplx(row["value"])) < 1e-12

    @pytest.mark.parametrize("row", TRI_PTS, ids=ids)
    def test_solver_vs_frozen(self, row):
        p = three_direction_problem(1.5, 1.0, row["alpha"], row["beta"], 1.0)
        assert abs(solve(p, "distinct")(row["t"]) - cplx(row["value"])) < 1e-9

    def test_reflection(self):
        # the opposite sign of the odd part describes E exp(-i <alpha, X>)
        lam, c, al, be, t = 1.5, 1.0, 0.7, 0.3, 1.0
        c0, c1, c2, c3 = three_direction_coefficients(lam, c, al, be)
        flipped = CauchyProblem.build(1.0, (c0.conjugate(), c1, c2, c3), [1, 0, -(c**2) * (al**2 + be**2) / 2])
        ours = solve(three_direction_problem(lam, c, al, be, 1.0))(t)
        assert abs(ours - exact_cf(TRI, t, (al, be))) < 1e-10
        assert abs(solve(flipped)(t) - exact_cf(TRI, t, (-al, -be))) < 1e-10
        assert abs(solve(flipped)(t) - ours) > 1e-3

    def test_zero_alpha(self):
        with pytest.raises(ZeroRootError):
            three_direction_problem(1.5, 1.0, 0.0, 0.0, 1.0)

    @pytest.mark.parametrize("nu,count", [(0.2, 1), (1 / 3, 1), (0.5, 2), (0.7, 3), (1.0, 3)])
    def test_condition_counts(self, nu, count):
        assert three_direction_problem(1.5, 1.0, 0.7, 0.3, nu).n_conds == count


class TestDecomposition:
    def test_passes(self):
        r = telegraph_decomposition_check(2.0, 1.0, 1.0, 100_000, seed=10)
        assert r.passed and r.max_sigma <= 3

    def test_t_zero(self):
        r = telegraph_decomposition_check(2.0, 1.0, 0.0, 10_000, seed=11)
        assert all(d.estimate == 1 and q.estimate == 1 for d, q in zip(r.direct, r.composed))
        assert r.max_discrepancy == 0

    def test_marginal(self):
        r = telegraph_decomposition_check(2.0, 1.0, 1.5, 50_000, seed=12, grid=[(1.0, 0.0), (2.5, 0.0)])
        assert r.passed

    def test_min_samples(self):
        with pytest.raises(ValueError):
            telegraph_decomposition_check(2.0, 1.0, 1.0, 9_999)
