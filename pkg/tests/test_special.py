import math
import threading

import numpy as np
import pytest
from conftest import FROZEN, cplx

from mlfrac.special import (
    MLConvergenceError,
    MLParams2,
    MLParamsMultivariate,
    MLParamsPrabhakar,
    PoleError,
    TruncationPolicy,
    log_gamma,
    ml2,
    ml_multivariate,
    ml_multivariate_scaled,
    ml_prabhakar,
    ml_shift_identity,
    rgamma,
)


def rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


class TestLogGamma:
    def test_values(self):
        assert log_gamma(1) == 0
        assert abs(log_gamma(0.5) - math.log(math.sqrt(math.pi))) < 1e-14
        assert abs(log_gamma(4) - math.log(6)) < 1e-14

    def test_exp_matches_gamma(self):
        for x in (0.3, 1.7, 5.5, 12.25):
            assert rel(np.exp(log_gamma(x)), math.gamma(x)) < 1e-13

    @pytest.mark.parametrize("z", [0, -1, -7])
    def test_poles(self, z):
        with pytest.raises(PoleError):
            log_gamma(z)

    def test_rgamma_zero_at_poles(self):
        assert rgamma(-3.0) == 0
        assert abs(rgamma(0.5) - 1 / math.sqrt(math.pi)) < 1e-15


class TestParams:
    def test_validation(self):
        with pytest.raises(ValueError):
            MLParams2(0, 1)
        with pytest.raises(ValueError):
            MLParams2(1, -0.5)
        with pytest.raises(ValueError):
            MLParamsPrabhakar(1, 1, 0)
        with pytest.raises(ValueError):
            MLParamsMultivariate(1, 1, ())
        with pytest.raises(ValueError):
            MLParamsMultivariate(1, 1, (1, -1))


class TestMl2:
    def test_exponential(self):
        assert rel(ml2(MLParams2(1, 1), 1), math.e) < 1e-12

    def test_cosh(self):
        assert rel(ml2(MLParams2(2, 1), 4), math.cosh(2)) < 1e-12

    @pytest.mark.parametrize("nu,delta", [(0.3, 1), (1, 2), (1.7, 0.4), (0.5, 2.5 + 1j)])
    def test_zero_argument(self, nu, delta):
        assert rel(ml2(MLParams2(nu, delta), 0), 1 / complex(math.gamma(delta)) if not isinstance(delta, complex)
                   else complex(rgamma(delta))) < 1e-14

    @pytest.mark.parametrize("row", FROZEN["ml2"], ids=lambda r: f"nu={r['nu']},z={r['z']}")
    def test_frozen_oracle(self, row):
        v = ml2(MLParams2(row["nu"], cplx(row["delta"])), cplx(row["z"]))
        assert rel(v, cplx(row["value"])) < 1e-11

    def test_array_input_matches_scalar(self):
        z = np.array([[-2.0, 0.5j], [3.0, -1 - 1j]])
        p = MLParams2(0.7, 1.2)
        v = ml2(p, z)
        assert v.shape == z.shape
        for idx in np.ndindex(z.shape):
            assert v[idx] == ml2(p, z[idx])

    def test_non_convergence(self):
        with pytest.raises(MLConvergenceError):
            ml2(MLParams2(0.3, 1), -20)

    def test_max_terms_respected(self):
        with pytest.raises(MLConvergenceError):
            ml2(MLParams2(1.0, 1.5), 30.0, TruncationPolicy(max_terms=20))

    def test_full_output(self):
        v, info = ml2(MLParams2(0.8, 1), -1.0, full_output=True)
        assert set(info) == {"terms", "rounding", "escalated"}
        assert info["terms"] > 0 and info["rounding"] < 1e-12

    def test_escalation_in_cancellation_regime(self):
        # terms reach ~1e25 here; the double sum alone is useless
        v, info = ml2(MLParams2(0.25, 1), -2.79, full_output=True)
        assert info["escalated"] == 1
        assert rel(v, 0.2319592210441298) < 1e-11

    def test_escalation_disabled_raises(self):
        with pytest.raises(MLConvergenceError, match="cancellation"):
            ml2(MLParams2(0.25, 1), -2.79, TruncationPolicy(escalate=False))

    @pytest.mark.parametrize("l", [1, 2, 3])
    @pytest.mark.parametrize("x", [0.5, 1.0, 2.0])
    def test_exponential_identity(self, l, x):
        expected = x ** (-l) * (math.exp(x) - sum(x**i / math.factorial(i) for i in range(l)))
        assert rel(ml2(MLParams2(1, l + 1), x), expected) < 1e-10

    def test_exponential_path_large_arguments(self):
        z = np.array([-30.0, 25.0, -12 + 9j])
        for d in (1, 2, 4):
            v = ml2(MLParams2(1, d), z)
            m = d - 1
            ref = [(np.exp(x) - sum(x**i / math.factorial(i) for i in range(m))) / x**m for x in z]
            assert np.all(np.abs(v - ref) <= 1e-12 * np.maximum(1, np.abs(ref)))

    def test_continuity_in_nu(self):
        for nu, z in ((0.6, -2.0), (1.3, 1.5 + 1j), (0.9, 3.0)):
            a = ml2(MLParams2(nu, 1.0), z)
            b = ml2(MLParams2(nu + 1e-6, 1.0), z)
            assert 0 < abs(a - b) < 1e-4 * max(1, abs(a))

    def test_thread_safety(self):
        z = np.linspace(-4, 4, 50)
        p = MLParams2(0.45, 1.1)
        ref = ml2(p, z)
        results = []

        def work():
            results.append(ml2(p, z))

        threads = [threading.Thread(target=work) for _ in range(8)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert all(np.array_equal(r, ref) for r in results)


class TestPrabhakar:
    def test_two_e(self):
        assert rel(ml_prabhakar(MLParamsPrabhakar(1, 1, 2), 1), 2 * math.e) < 1e-12

    def test_gamma_one_is_ml2(self):
        rng = np.random.default_rng(11)
        for _ in range(30):
            nu, d = rng.uniform(0.5, 2), rng.uniform(0.2, 3)
            z = rng.uniform(0, 5) * np.exp(2j * np.pi * rng.random())
            assert rel(ml_prabhakar(MLParamsPrabhakar(nu, d, 1), z), ml2(MLParams2(nu, d), z)) < 1e-12

    def test_zero(self):
        assert ml_prabhakar(MLParamsPrabhakar(1, 2, 1), 0) == 1

    @pytest.mark.parametrize("row", FROZEN["prabhakar"], ids=lambda r: f"nu={r['nu']},g={r['gamma']}")
    def test_frozen_oracle(self, row):
        p = MLParamsPrabhakar(row["nu"], cplx(row["delta"]), cplx(row["gamma"]))
        assert rel(ml_prabhakar(p, cplx(row["z"])), cplx(row["value"])) < 1e-11


class TestMultivariate:
    def test_single_variable_is_prabhakar_bitwise(self):
        for g, z in ((2, 1.0), (1.5, -0.7 + 0.2j), (3, 2.5)):
            a = ml_multivariate(MLParamsMultivariate(0.8, 1.2, (g,)), [z])
            b = ml_prabhakar(MLParamsPrabhakar(0.8, 1.2, g), z)
            assert a == b

    def test_zero_arguments(self):
        v = ml_multivariate(MLParamsMultivariate(0.7, 2.5, (1, 2, 3)), [0, 0, 0])
        assert rel(v, 1 / math.gamma(2.5)) < 1e-14

    def test_sinh(self):
        v = ml_multivariate(MLParamsMultivariate(1, 2, (1, 1)), [1, -1])
        assert rel(v, math.sinh(1)) < 1e-12

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            ml_multivariate(MLParamsMultivariate(1, 2, (1, 1)), [1.0])

    @pytest.mark.parametrize("row", FROZEN["multi"], ids=lambda r: f"M={len(r['gammas'])}")
    def test_frozen_oracle(self, row):
        p = MLParamsMultivariate(row["nu"], cplx(row["delta"]), tuple(row["gammas"]))
        v = ml_multivariate(p, [cplx(z) for z in row["z"]])
        assert rel(v, cplx(row["value"])) < 1e-11

    def test_scaled_form_matches_direct(self):
        p = MLParamsMultivariate(0.9, 1.4, (2, 1))
        eta = [-1.5 + 0.3j, 0.6]
        for x in (0.2, 1.0, 1.7):
            assert rel(ml_multivariate_scaled(p, eta, x), ml_multivariate(p, [e * x for e in eta])) < 1e-12


class TestShiftIdentity:
    def test_n_zero_is_ml2(self):
        for z in (0.3, -2.0, 1 + 1j):
            assert rel(ml_shift_identity(0.6, 1.3, 0, z), ml2(MLParams2(0.6, 1.3), z)) < 1e-14

    def test_e_minus_one(self):
        assert rel(ml_shift_identity(1, 1, 1, 1.0), math.e - 1) < 1e-12

    def test_against_direct(self):
        assert rel(ml_shift_identity(0.5, 1, 2, 2.0), ml2(MLParams2(0.5, 2.0), 2.0)) < 1e-10

    def test_randomized(self):
        rng = np.random.default_rng(5)
        for _ in range(40):
            nu = rng.uniform(0.2, 1)
            n = int(rng.integers(1, 4))
            z = rng.uniform(0.1, 5) * np.exp(2j * np.pi * rng.random())
            if abs(z) ** n < 1e-3 or (nu < 0.3 and abs(z) > 3):
                continue
            a = ml_shift_identity(nu, 1.0, n, z)
            b = ml2(MLParams2(nu, n * nu + 1.0), z)
            assert rel(a, b) < 1e-9 or abs(a - b) < 1e-12

    def test_rejects_zero(self):
        with pytest.raises(ValueError):
            ml_shift_identity(0.5, 1, 1, 0)
