"""Independent numerical oracles for the closed-form solutions.

* the Laplace-domain solution and fixed-Talbot numerical inversion,
* a Grunwald-Letnikov Caputo derivative,
* adaptive quadrature for convolutions with endpoint power singularities.

None of these use the Mittag-Leffler series, so agreement with
:func:`mlfrac.solver.evaluate_solution` is a genuine cross-check.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import mpmath
import numpy as np

from mlfrac import _mp
from mlfrac.quadrature import QuadResult, integrate
from mlfrac.solver import CauchyProblem, _ramp_pieces, k_threshold


class LaplaceInversionError(ArithmeticError):
    """Talbot estimates at M and 2M nodes disagree beyond tolerance."""


class GridError(ValueError):
    """The sampling grid does not reach t in whole steps."""


class PoleProximityWarning(RuntimeWarning):
    pass


def laplace_transform_solution(p: CauchyProblem, mu):
    """Laplace transform G(mu) of the solution of ``p``.

    Works for Python complex, numpy arrays and mpmath numbers. mu^nu is the
    principal branch. The transform assumes that e^{-mu t} times each
    derivative of the solution vanishes as t grows, for Re mu beyond the
    abscissa; this growth condition is not checked.
    """
    lam = [complex(v) for v in p.lam]
    pw = mu**p.nu
    den = 0
    powers = [1]
    for _ in range(p.N):
        powers.append(powers[-1] * pw)
    for k in range(p.N + 1):
        if lam[k] != 0:
            den = den + lam[k] * powers[k]
    num = 0
    for l in range(1, p.n_conds + 1):
        f = p.init_conds[l - 1]
        if f == 0:
            continue
        inner = 0
        for k in range(k_threshold(l - 1, p.nu, p.N), p.N + 1):
            if lam[k] != 0:
                inner = inner + lam[k] * powers[k]
        num = num + f * inner / mu**l
    if p.forcing is not None and not p.forcing.is_zero:
        num = num + p.forcing.laplace_transform(mu)
    if np.any(abs(den) < 1e-12):
        warnings.warn("Laplace denominator below 1e-12: mu is close to a pole", PoleProximityWarning,
                      stacklevel=2)
    return num / den


@dataclass(frozen=True)
class LaplaceSolution:
    problem: CauchyProblem

    def __call__(self, mu):
        return laplace_transform_solution(self.problem, mu)

    @property
    def abscissa(self) -> float:
        return solution_abscissa(self.problem)


def solution_abscissa(p: CauchyProblem) -> float:
    """Largest real part of the poles mu = eta^{1/nu} on the principal sheet (0 if none is positive).

    The branch point at 0 contributes 0.
    """
    best = 0.0
    for eta in p.spectrum.roots:
        if eta == 0:
            continue
        r = abs(eta) ** (1.0 / p.nu)
        a = cmath.phase(eta)
        # arguments (a + 2 pi j)/nu that land in (-pi, pi]
        jmin = math.ceil((-math.pi * p.nu - a) / (2 * math.pi) - 1e-12)
        jmax = math.floor((math.pi * p.nu - a) / (2 * math.pi) + 1e-12)
        for j in range(jmin, jmax + 1):
            ang = (a + 2 * math.pi * j) / p.nu
            if -math.pi < ang <= math.pi:
                best = max(best, r * math.cos(ang))
    return best


def _talbot(f: Callable, t: float, M: int, shift: float):
    ctx = _mp.context(int(20 + 0.4 * M))
    r = ctx.mpf(2 * M) / (5 * t)
    s0 = shift + r
    total = ctx.exp(t * s0) * ctx.mpc(f(ctx.mpc(s0)))
    for k in range(1, M):
        th = ctx.pi * k / M
        cot = ctx.cot(th)
        s = shift + r * th * ctx.mpc(cot, 1)
        sig = th + (th * cot - 1) * cot
        sc = ctx.conj(s)
        total += ctx.exp(t * s) * ctx.mpc(f(s)) * ctx.mpc(1, sig)
        total += ctx.exp(t * sc) * ctx.mpc(f(sc)) * ctx.mpc(1, -sig)
    return complex(total * r / (2 * M))


def invert_laplace(f: Callable, t: float, M: int = 48, shift: float = 0.0, tol: float = 1e-8,
                   validate: bool = True, full_output: bool = False):
    """Fixed-Talbot inversion of ``f`` at ``t > 0``.

    ``f`` receives mpmath complex numbers, so it should use plain arithmetic
    (as :func:`laplace_transform_solution` does). ``shift`` moves the contour
    right of all singularities. With ``validate`` the estimate is recomputed
    with 2M nodes; the 2M value is returned and the two must agree to
    ``tol * max(1, |value|)``.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    if M < 2:
        raise ValueError("M must be at least 2")
    try:
        v = _talbot(f, t, M, shift)
    except OverflowError as exc:
        raise LaplaceInversionError(f"Talbot sum overflowed at t={t:g}") from exc
    if not validate:
        return (v, {"nodes": M, "difference": float("nan")}) if full_output else v
    try:
        v2 = _talbot(f, t, 2 * M, shift)
    except OverflowError as exc:
        raise LaplaceInversionError(f"Talbot sum overflowed at t={t:g}") from exc
    try:
        diff = abs(v2 - v)
    except OverflowError:
        diff = math.inf
    if not diff <= tol * max(1.0, abs(v2)):
        raise LaplaceInversionError(
            f"Talbot estimates with {M} and {2 * M} nodes differ by {diff:.2e} at t={t:g}"
        )
    return (v2, {"nodes": 2 * M, "difference": diff}) if full_output else v2


def _denominator(p: CauchyProblem, mu):
    pw = mu**p.nu
    den, power = 0, 1
    for k in range(p.N + 1):
        lam = complex(p.lam[k])
        if lam != 0:
            den = den + lam * power
        power = power * pw
    return den


def invert_solution(p: CauchyProblem, t, M: int = 48, tol: float = 1e-8):
    """Invert the Laplace-domain solution of ``p`` at each t > 0.

    Table forcing is split into delayed ramps: the delay factors e^{-mu t_i}
    would grow without bound on the Talbot contour, so each ramp response
    is inverted undelayed and evaluated at t - t_i.
    """
    shift = solution_abscissa(p)
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    if p.forcing is None or p.forcing.kind != "table":
        out = np.array([invert_laplace(LaplaceSolution(p), float(v), M, shift, tol) for v in ts])
    else:
        hom = LaplaceSolution(p.homogeneous())
        v0, pieces = _ramp_pieces(p.forcing)

        def step(mu):
            return 1 / (mu * _denominator(p, mu))

        def ramp(mu):
            return 1 / (mu**2 * _denominator(p, mu))

        out = []
        for v in ts:
            val = invert_laplace(hom, float(v), M, shift, tol)
            if v0 != 0:
                val += v0 * invert_laplace(step, float(v), M, shift, tol)
            for ti, c in pieces:
                if v > ti:
                    val += c * invert_laplace(ramp, float(v - ti), M, shift, tol)
            out.append(val)
        out = np.array(out)
    return complex(out[0]) if np.ndim(t) == 0 else out.reshape(np.shape(t))


def gl_weights(nu: float, n: int) -> np.ndarray:
    """Grunwald-Letnikov weights (-1)^j binom(nu, j), j = 0..n."""
    w = np.empty(n + 1)
    w[0] = 1.0
    if n:
        j = np.arange(1, n + 1)
        w[1:] = np.cumprod(1.0 - (nu + 1.0) / j)
    return w


def _grid_steps(t: float, h: float) -> int:
    if not (h > 0 and t > 0):
        raise GridError("t and h must be positive")
    n = round(t / h)
    if n < 1 or abs(n * h - t) > 1e-9 * max(t, h):
        raise GridError(f"t={t:g} is not a whole multiple of h={h:g}")
    return n


def _caputo_on_values(values: np.ndarray, grid: np.ndarray, nu: float, h: float,
                      derivs0: Sequence[complex]) -> complex:
    m = math.ceil(nu - 1e-12)
    taylor = np.zeros(grid.shape, dtype=np.complex128)
    for j in range(m):
        taylor += complex(derivs0[j]) * grid**j / math.factorial(j)
    g = values - taylor
    w = gl_weights(nu, grid.size - 1)
    # g at t - j h for j = 0..n
    return complex(h ** (-nu) * np.dot(w, g[::-1]))


def caputo_derivative_numeric(f: Callable, nu: float, t: float, h: float,
                              derivs0: Sequence[complex] | None = None) -> complex:
    """Caputo derivative of order ``nu`` at ``t`` on the grid 0, h, ..., t.

    Grunwald-Letnikov applied to f minus its Maclaurin polynomial of degree
    ceil(nu) - 1, built from ``derivs0`` = (f(0), f'(0), ...). If omitted,
    only f(0) is used and nu must be at most 1. First order in h. ``f`` is
    called once with the whole grid.
    """
    if not nu > 0:
        raise ValueError("nu must be positive")
    m = math.ceil(nu - 1e-12)
    n = _grid_steps(t, h)
    grid = h * np.arange(n + 1)
    values = np.asarray(f(grid), dtype=np.complex128)
    if derivs0 is None:
        if m > 1:
            raise ValueError(f"order {nu} needs derivs0 with {m} Maclaurin coefficients")
        derivs0 = [values[0]]
    if len(derivs0) < m:
        raise ValueError(f"order {nu} needs {m} Maclaurin coefficients, got {len(derivs0)}")
    return _caputo_on_values(values, grid, nu, h, derivs0)


def caputo_residual(p: CauchyProblem, F: Callable, t: float, h: float) -> complex:
    """sum_k lambda_k D^{nu k} F(t) - g(t) with the numerical Caputo operator.

    F is sampled once on the grid; the Maclaurin data are the initial
    conditions of ``p``.
    """
    n = _grid_steps(t, h)
    grid = h * np.arange(n + 1)
    values = np.asarray(F(grid), dtype=np.complex128)
    lam = p.lam
    res = lam[0] * values[-1]
    for k in range(1, p.N + 1):
        if lam[k] != 0:
            res += lam[k] * _caputo_on_values(values, grid, p.nu * k, h, p.init_conds)
    if p.forcing is not None:
        res -= complex(p.forcing(np.array([t]))[0])
    return complex(res)


def convolve_numeric(f: Callable, g: Callable, t: float, f_exp: float = 0.0, g_exp: float = 0.0,
                     abs_tol: float = 1e-12, rel_tol: float = 1e-10,
                     full_output: bool = False):
    """int_0^t f(t - s) g(s) ds by adaptive Gauss-Kronrod.

    ``f_exp`` and ``g_exp`` (> -1) declare power behaviour f(x) ~ x^f_exp
    and g(x) ~ x^g_exp at 0. The range is split at t/2 and each half uses a
    substitution that turns the declared power into a smooth integrand.
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    if f_exp <= -1 or g_exp <= -1:
        raise ValueError("singularity exponents must exceed -1")
    if t == 0:
        return (0j, QuadResult(0j, 0.0, 0, 0, True)) if full_output else 0j
    half = 0.5 * t

    def left(u):
        # s = half * u^{1/(b+1)}, ds = half/(b+1) u^{1/(b+1)-1} du
        if g_exp == 0:
            s = half * u
            return f(t - s) * g(s) * half
        q = 1.0 / (g_exp + 1.0)
        s = half * u**q
        return f(t - s) * g(s) * half * q * u ** (q - 1)

    def right(u):
        if f_exp == 0:
            x = half * u
            return f(x) * g(t - x) * half
        q = 1.0 / (f_exp + 1.0)
        x = half * u**q
        return f(x) * g(t - x) * half * q * u ** (q - 1)

    r1 = integrate(left, 0.0, 1.0, abs_tol, rel_tol)
    r2 = integrate(right, 0.0, 1.0, abs_tol, rel_tol)
    value = r1.value + r2.value
    if full_output:
        info = QuadResult(value, r1.error + r2.error, r1.evaluations + r2.evaluations,
                          r1.intervals + r2.intervals, r1.converged and r2.converged)
        return value, info
    return value
