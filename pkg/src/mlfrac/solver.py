"""Closed-form solutions of fractional Cauchy problems with orders nu*k.

The problem is

    sum_{k=0}^N lambda_k D^{nu k} F(t) = g(t),   D^{nu k} Caputo,

with F^{(l)}(0) = f_l for l < ceil(nu N). The solution is a finite sum of
multivariate Mittag-Leffler functions evaluated at eta_j t^nu, eta_j the
roots of sum_k lambda_k x^k. The leading coefficient need not be 1; every
weight is divided by lambda_N.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from mlfrac.charpoly import (
    CharPolynomial,
    MultiplicityError,
    RootSpectrum,
    find_roots,
    residue_weights,
    ZeroRootError,
)
from mlfrac.quadrature import integrate
from mlfrac.special import (
    MLParams2,
    MLParamsMultivariate,
    TruncationPolicy,
    ml2,
    ml_multivariate_scaled,
)

# slack for ceil/strict comparisons of products like nu*k that should be integers
_SLACK = 1e-12


def n_conditions(nu: float, N: int) -> int:
    """ceil(nu N), the number of initial conditions."""
    return max(1, math.ceil(nu * N - _SLACK))


def k_threshold(l: int, nu: float, N: int) -> int:
    """Smallest k in 1..N with nu k > l."""
    if not 0 <= l <= n_conditions(nu, N) - 1:
        raise ValueError(f"l={l} outside 0..{n_conditions(nu, N) - 1}")
    for k in range(1, N + 1):
        if nu * k > l + _SLACK:
            return k
    raise AssertionError("unreachable: nu*N exceeds every admissible l")


@dataclass(frozen=True)
class Forcing:
    """Right-hand side g(t).

    ``kind`` is "constant" (``value``), "table" (piecewise-linear through
    ``times``/``values``, flat outside) or "callable" (``func``, vectorized,
    with an optional Laplace transform ``laplace``).
    """

    kind: str
    value: complex = 0.0
    times: tuple = ()
    values: tuple = ()
    func: Callable | None = field(default=None, compare=False)
    laplace: Callable | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in ("constant", "table", "callable"):
            raise ValueError(f"unknown forcing kind {self.kind!r}")
        if self.kind == "table":
            t = np.asarray(self.times, dtype=float)
            if t.size < 1 or t.size != len(self.values):
                raise ValueError("table forcing needs matching non-empty times and values")
            if np.any(np.diff(t) <= 0) or t[0] < 0:
                raise ValueError("table times must be non-negative and increasing")
            object.__setattr__(self, "times", tuple(float(v) for v in t))
            object.__setattr__(self, "values", tuple(complex(v) for v in self.values))
        if self.kind == "callable" and self.func is None:
            raise ValueError("callable forcing needs func")
        object.__setattr__(self, "value", complex(self.value))

    @classmethod
    def constant(cls, value: complex) -> "Forcing":
        return cls("constant", value=value)

    @classmethod
    def table(cls, times: Sequence[float], values: Sequence[complex]) -> "Forcing":
        return cls("table", times=tuple(times), values=tuple(values))

    @classmethod
    def from_callable(cls, func: Callable, laplace: Callable | None = None) -> "Forcing":
        return cls("callable", func=func, laplace=laplace)

    @property
    def is_zero(self) -> bool:
        if self.kind == "constant":
            return self.value == 0
        if self.kind == "table":
            return all(v == 0 for v in self.values)
        return False

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "constant":
            return np.full(t.shape, self.value, dtype=np.complex128)
        if self.kind == "table":
            v = np.array(self.values)
            return np.interp(t, self.times, v.real) + 1j * np.interp(t, self.times, v.imag)
        return np.asarray(self.func(t), dtype=np.complex128)

    def laplace_transform(self, mu):
        """Transform of g at ``mu`` (complex or mpmath value)."""
        if self.kind == "constant":
            return self.value / mu
        if self.kind == "callable":
            if self.laplace is None:
                raise NotImplementedError("callable forcing has no Laplace transform")
            return self.laplace(mu)
        return _piecewise_linear_laplace(self.times, self.values, mu)


def _piecewise_linear_laplace(times, values, mu):
    # integral of e^{-mu t} g(t) for g linear between knots, flat outside
    ctx = getattr(mu, "context", None)
    exp = ctx.exp if ctx is not None else np.exp
    t0, v0 = times[0], values[0]
    out = v0 * (1 - exp(-mu * t0)) / mu
    for (ta, va), (tb, vb) in zip(zip(times, values), zip(times[1:], values[1:])):
        s = (vb - va) / (tb - ta)
        ea, eb = exp(-mu * ta), exp(-mu * tb)
        # int_ta^tb (va + s (t - ta)) e^{-mu t} dt
        out += (va * ea - vb * eb) / mu + s * (ea - eb) / mu**2
    out += values[-1] * exp(-mu * times[-1]) / mu
    return out


@dataclass(frozen=True)
class CauchyProblem:
    """Problem data at one transform point.

    Use :meth:`build` for construction from coefficients; it finds the
    roots unless a spectrum is given, and checks the spectrum against the
    polynomial either way.
    """

    nu: float
    poly: CharPolynomial
    spectrum: RootSpectrum
    init_conds: tuple
    forcing: Forcing | None = None
    allow_zero_root: bool = False

    def __post_init__(self):
        if not self.nu > 0:
            raise ValueError(f"nu must be positive, got {self.nu}")
        conds = tuple(complex(v) for v in self.init_conds)
        need = n_conditions(self.nu, self.N)
        if len(conds) != need:
            raise ValueError(f"expected {need} initial conditions for nu={self.nu}, N={self.N}, got {len(conds)}")
        object.__setattr__(self, "init_conds", conds)
        if not self.allow_zero_root and any(r == 0 for r in self.spectrum.roots):
            raise ZeroRootError("characteristic polynomial has a zero root")
        self.spectrum.check(self.poly)

    @classmethod
    def build(cls, nu: float, coeffs: Sequence[complex], init_conds: Sequence[complex],
              roots: Sequence[complex] | None = None, mults: Sequence[int] | None = None,
              forcing: Forcing | None = None, cluster_radius: float = 1e-7,
              allow_zero_root: bool = False) -> "CauchyProblem":
        poly = CharPolynomial(tuple(coeffs))
        if roots is None:
            spec = find_roots(poly, cluster_radius=cluster_radius, allow_zero=allow_zero_root)
        else:
            spec = RootSpectrum(tuple(roots), tuple(mults if mults is not None else [1] * len(roots)),
                                allow_zero=allow_zero_root)
        return cls(nu, poly, spec, tuple(init_conds), forcing, allow_zero_root)

    @property
    def N(self) -> int:
        return self.poly.degree

    @property
    def n_conds(self) -> int:
        return len(self.init_conds)

    @property
    def lam(self) -> np.ndarray:
        return self.poly.array

    def with_nu(self, nu: float, init_conds: Sequence[complex] | None = None) -> "CauchyProblem":
        conds = self.init_conds if init_conds is None else tuple(init_conds)
        return CauchyProblem(nu, self.poly, self.spectrum, conds, self.forcing, self.allow_zero_root)

    def homogeneous(self) -> "CauchyProblem":
        return CauchyProblem(self.nu, self.poly, self.spectrum, self.init_conds, None, self.allow_zero_root)


@dataclass(frozen=True)
class GeneralTerm:
    l: int
    k: int
    weight: complex  # f_l lambda_k / lambda_N
    power: float  # nu (N - k) + l


@dataclass(frozen=True)
class DistinctTerm:
    h: int
    eta: complex
    l: int
    coefficient: complex


@dataclass(frozen=True)
class ForcingPart:
    """(1/lambda_N) int_0^t g(t-y) y^{nu N - 1} E^{(m)}_{nu, nu N}(eta y^nu) dy."""

    forcing: Forcing
    scale: complex  # 1 / lambda_N
    abs_tol: float = 1e-11
    rel_tol: float = 1e-10


@dataclass(frozen=True)
class SolutionExpansion:
    """Weighted Mittag-Leffler sum; immutable and safe to share.

    ``form`` is "general" (``terms`` are :class:`GeneralTerm`) or "distinct"
    (``terms`` are :class:`DistinctTerm`).
    """

    form: str
    nu: float
    N: int
    roots: tuple
    mults: tuple
    terms: tuple
    forcing: ForcingPart | None = None
    policy: TruncationPolicy | None = None

    def __call__(self, t):
        return evaluate_solution(self, t)

    def term_rows(self) -> list:
        """Rows for tabular export; the header is :attr:`term_header`."""
        rows = []
        for tm in self.terms:
            if self.form == "general":
                rows.append([tm.l, tm.k, tm.weight.real, tm.weight.imag, tm.power, tm.power + 1])
            else:
                rows.append([tm.h, tm.l, tm.eta.real, tm.eta.imag, tm.coefficient.real, tm.coefficient.imag])
        return rows

    @property
    def term_header(self) -> list:
        if self.form == "general":
            return ["l", "k", "weight_re", "weight_im", "power", "delta"]
        return ["h", "l", "eta_re", "eta_im", "coef_re", "coef_im"]


def _general_terms(p: CauchyProblem) -> tuple:
    lam = p.lam / p.lam[-1]
    terms = []
    for l, f in enumerate(p.init_conds):
        if f == 0:
            continue
        for k in range(k_threshold(l, p.nu, p.N), p.N + 1):
            if lam[k] == 0:
                continue
            terms.append(GeneralTerm(l, k, complex(f * lam[k]), p.nu * (p.N - k) + l))
    return tuple(terms)


def solve_general(p: CauchyProblem, policy: TruncationPolicy | None = None) -> SolutionExpansion:
    """Solution as a sum over (l, k) of t^{nu(N-k)+l} E^{(m)}_{nu, nu(N-k)+l+1}(eta t^nu)."""
    if p.forcing is not None and not p.forcing.is_zero:
        raise ValueError("problem has a forcing term; use solve_nonhomogeneous")
    return SolutionExpansion("general", p.nu, p.N, p.spectrum.roots, p.spectrum.mults,
                             _general_terms(p), None, policy)


def solve_distinct(p: CauchyProblem, policy: TruncationPolicy | None = None) -> SolutionExpansion:
    """Simple-root form: sum over (h, l) of c_{hl} t^l E_{nu, l+1}(eta_h t^nu)."""
    if not p.spectrum.simple:
        raise MultiplicityError("the distinct-root form needs simple roots")
    if p.forcing is not None and not p.forcing.is_zero:
        raise ValueError("problem has a forcing term; use solve_nonhomogeneous")
    lam = p.lam / p.lam[-1]
    w = residue_weights(p.spectrum)  # column k-1 is power k
    terms = []
    for l, f in enumerate(p.init_conds):
        if f == 0:
            continue
        kl = k_threshold(l, p.nu, p.N)
        for h, eta in enumerate(p.spectrum.roots):
            coef = f * np.sum(lam[kl:] * w[h, kl - 1:])
            terms.append(DistinctTerm(h, eta, l, complex(coef)))
    return SolutionExpansion("distinct", p.nu, p.N, p.spectrum.roots, p.spectrum.mults,
                             tuple(terms), None, policy)


def solve_nonhomogeneous(p: CauchyProblem, policy: TruncationPolicy | None = None,
                         form: str = "general", abs_tol: float = 1e-11,
                         rel_tol: float = 1e-10) -> SolutionExpansion:
    """Homogeneous expansion plus the forcing convolution.

    Constant and table forcing are evaluated in closed form: a constant g
    gives (g/lambda_N) t^{nu N} E^{(m)}_{nu, nu N + 1}(eta t^nu) and each
    ramp (t - t_i)_+ of a piecewise-linear table raises both the power and
    delta by one. Callable forcing uses adaptive quadrature.
    """
    base = p.homogeneous()
    hom = solve_distinct(base, policy) if form == "distinct" else solve_general(base, policy)
    if p.forcing is None or p.forcing.is_zero:
        return hom
    part = ForcingPart(p.forcing, complex(1.0 / p.lam[-1]), abs_tol, rel_tol)
    return SolutionExpansion(hom.form, hom.nu, hom.N, hom.roots, hom.mults, hom.terms, part, policy)


def solve(p: CauchyProblem, form: str = "general", policy: TruncationPolicy | None = None) -> SolutionExpansion:
    """Dispatch on ``form`` and on the presence of forcing."""
    if form not in ("general", "distinct"):
        raise ValueError(f"unknown form {form!r}")
    if p.forcing is not None and not p.forcing.is_zero:
        return solve_nonhomogeneous(p, policy, form=form)
    return solve_distinct(p, policy) if form == "distinct" else solve_general(p, policy)


def _ml_block(s: SolutionExpansion, delta: float, x: np.ndarray) -> np.ndarray:
    params = MLParamsMultivariate(s.nu, delta, s.mults)
    return ml_multivariate_scaled(params, s.roots, x, s.policy)


def _ramp_pieces(forcing: Forcing) -> tuple:
    """Constant or table g as v_0 + sum_i c_i (t - t_i)_+."""
    if forcing.kind == "constant":
        return forcing.value, ()
    times, values = forcing.times, forcing.values
    slopes = [(vb - va) / (tb - ta) for ta, tb, va, vb in zip(times, times[1:], values, values[1:])]
    slopes.append(0j)
    prev, pieces = 0j, []
    for ti, sl in zip(times, slopes):
        if sl != prev:
            pieces.append((ti, sl - prev))
        prev = sl
    return values[0], tuple(pieces)


def _forcing_closed(s: SolutionExpansion, t: np.ndarray) -> np.ndarray:
    # a constant contributes s^{nu N} E_{nu, nu N + 1}, a ramp (t - t_i)_+
    # contributes s^{nu N + 1} E_{nu, nu N + 2} with s = t - t_i
    part = s.forcing
    nuN = s.nu * s.N
    v0, pieces = _ramp_pieces(part.forcing)
    out = np.zeros(t.shape, dtype=np.complex128)
    if v0 != 0:
        out += v0 * t**nuN * _ml_block(s, nuN + 1, (t**s.nu).astype(complex))
    for ti, c in pieces:
        live = t > ti
        if live.any():
            u = t[live] - ti
            out[live] += c * u ** (nuN + 1) * _ml_block(s, nuN + 2, (u**s.nu).astype(complex))
    return part.scale * out


def _forcing_value(s: SolutionExpansion, t: float) -> complex:
    """Convolution by adaptive quadrature (callable forcing)."""
    part = s.forcing
    nuN = s.nu * s.N
    if t == 0:
        return 0j
    if nuN < 1:
        # y = t u^{1/(nu N)} absorbs the y^{nu N - 1} singularity
        def integrand(u):
            y = t * u ** (1.0 / nuN)
            return part.forcing(t - y) * _ml_block(s, nuN, (y**s.nu).astype(complex))

        res = integrate(integrand, 0.0, 1.0, part.abs_tol, part.rel_tol)
        return complex(part.scale * t**nuN / nuN * res.value)

    def integrand(y):
        return part.forcing(t - y) * y ** (nuN - 1) * _ml_block(s, nuN, (y**s.nu).astype(complex))

    res = integrate(integrand, 0.0, t, part.abs_tol, part.rel_tol)
    return complex(part.scale * res.value)


def evaluate_solution(s: SolutionExpansion, t):
    """F(t) for scalar or array t >= 0. At t = 0 positive powers vanish and t^0 = 1."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0) or not np.all(np.isfinite(t_arr)):
        raise ValueError("t must be finite and non-negative")
    flat = t_arr.ravel()
    out = np.zeros(flat.shape, dtype=np.complex128)
    x = (flat**s.nu).astype(np.complex128)
    if s.form == "general":
        groups: dict = {}
        for tm in s.terms:
            key = round(tm.power, 12)
            groups[key] = groups.get(key, 0) + tm.weight
        for power, weight in groups.items():
            if weight == 0:
                continue
            out += weight * flat**power * _ml_block(s, power + 1, x)
    else:
        for tm in s.terms:
            if tm.coefficient == 0:
                continue
            e = ml2(MLParams2(s.nu, tm.l + 1), tm.eta * x, s.policy)
            out += tm.coefficient * flat**tm.l * e
    if s.forcing is not None:
        if s.forcing.forcing.kind == "callable":
            out += np.array([_forcing_value(s, float(v)) for v in flat])
        else:
            out += _forcing_closed(s, flat)
    if t_arr.ndim == 0:
        return complex(out[0])
    return out.reshape(t_arr.shape)
