"""G-variables and the subordination identity F_{nu/n}(t) = E F_nu(G_1 ... G_{n-1}).

G_j^{(n)}(t), j = 1..n-1, has density

    y^{j-1} exp(-y^n / c) / (n^{j/(n-1)-1} t^{j/(n(n-1))} Gamma(j/n)),
    c = (n^n t)^{1/(n-1)},

so Y^n / c is Gamma(j/n) distributed. For n = 2 this is |B(2t)|.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special as sc

from mlfrac.mc import MCEstimate, monte_carlo
from mlfrac.quadrature import integrate
from mlfrac.solver import CauchyProblem, SolutionExpansion, evaluate_solution, n_conditions, solve
from mlfrac.special import TruncationPolicy

# Monte Carlo standard errors are ~1e-3, so rounding control can be looser
MC_POLICY = TruncationPolicy(max_loss=1e-8)


@dataclass(frozen=True)
class GVariableSpec:
    n: int
    j: int
    t: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"n must be an integer >= 2, got {self.n}")
        if int(self.j) != self.j or not 1 <= self.j <= self.n - 1:
            raise ValueError(f"j must be in 1..{self.n - 1}, got {self.j}")
        if not self.t > 0:
            raise ValueError(f"t must be positive, got {self.t}")

    @property
    def scale(self) -> float:
        """c = (n^n t)^{1/(n-1)}."""
        return (self.n**self.n * self.t) ** (1.0 / (self.n - 1))


def g_density(spec: GVariableSpec, y):
    """Density of G_j^{(n)}(t) at y > 0."""
    y = np.asarray(y, dtype=float)
    if np.any(y <= 0):
        raise ValueError("the density is defined for y > 0")
    n, j, t = spec.n, spec.j, spec.t
    log_norm = (j / (n - 1) - 1) * math.log(n) + j / (n * (n - 1)) * math.log(t) + sc.gammaln(j / n)
    out = np.exp((j - 1) * np.log(y) - y**n / spec.scale - log_norm)
    return float(out) if out.ndim == 0 else out


def sample_g(spec: GVariableSpec, rng: np.random.Generator, size=None):
    """Exact draws Y = (c W)^{1/n}, W ~ Gamma(j/n, 1)."""
    w = rng.gamma(spec.j / spec.n, 1.0, size)
    return (spec.scale * w) ** (1.0 / spec.n)


def mellin_g(spec: GVariableSpec, s: float) -> float:
    """E[Y^{s-1}] = (n t^{1/n})^{(s-1)/(n-1)} Gamma((s+j-1)/n) / Gamma(j/n)."""
    if not s > 0:
        raise ValueError("s must be positive")
    n, j, t = spec.n, spec.j, spec.t
    log_v = ((s - 1) / (n - 1)) * math.log(n * t ** (1.0 / n)) + sc.gammaln((s + j - 1) / n) - sc.gammaln(j / n)
    return math.exp(log_v)


def mellin_product(n: int, t: float, s: float) -> float:
    """Closed form of prod_j mellin_g: t^{(s-1)/n} Gamma(s) / Gamma((s-1)/n + 1)."""
    if not s > 0:
        raise ValueError("s must be positive")
    return math.exp((s - 1) / n * math.log(t) + sc.gammaln(s) - sc.gammaln((s - 1) / n + 1))


def gamma_multiplication_lhs(z: float, n: int) -> float:
    """prod_{j=1}^{n-1} Gamma(z + (j-1)/n)."""
    return float(np.prod(sc.gamma(z + np.arange(n - 1) / n)))


def gamma_multiplication_rhs(z: float, n: int) -> float:
    """(2 pi)^{(n-1)/2} n^{1/2 - n z} Gamma(n z) / Gamma(z + (n-1)/n)."""
    return (2 * math.pi) ** ((n - 1) / 2) * n ** (0.5 - n * z) * sc.gamma(n * z) / sc.gamma(z + (n - 1) / n)


@dataclass(frozen=True)
class SubordinationPlan:
    """Target problem of order nu/n and the associated base problem of order nu."""

    base_nu: float
    divisor: int
    base_problem: CauchyProblem
    target_problem: CauchyProblem

    def base_solution(self, policy: TruncationPolicy | None = None) -> SolutionExpansion:
        return _fast_solution(self.base_problem, policy)


def build_associated_problem(target: CauchyProblem, n: int) -> SubordinationPlan:
    """Base problem of order n * target.nu with f~_{hn} = f_h and zeros elsewhere."""
    if int(n) != n or n < 1:
        raise ValueError("n must be a positive integer")
    if target.forcing is not None and not target.forcing.is_zero:
        raise ValueError("subordination applies to homogeneous problems")
    nu = target.nu * n
    count = n_conditions(nu, target.N)
    padded = [0j] * count
    for h, f in enumerate(target.init_conds):
        if h * n > count - 1:
            raise AssertionError("condition count relation violated")
        padded[h * n] = f
    base = target.with_nu(nu, padded)
    return SubordinationPlan(nu, int(n), base, target)


def _fast_solution(p: CauchyProblem, policy: TruncationPolicy | None) -> SolutionExpansion:
    # the simple-root form needs only two-parameter functions, which have an
    # exponential fast path at nu = 1 for the large arguments sampling produces
    return solve(p, form="distinct" if p.spectrum.simple else "general", policy=policy)


def _product_sampler(n: int, t: float):
    specs = [GVariableSpec(n, j, t) for j in range(1, n)]

    def draw(rng, size):
        T = np.ones(size)
        for s in specs:
            T *= sample_g(s, rng, size)
        return T

    return draw


def subordinate_mc(plan: SubordinationPlan, t: float, samples: int, seed=None,
                   policy: TruncationPolicy = MC_POLICY, threads: int | None = None) -> MCEstimate:
    """Monte Carlo estimate of F_{nu/n}(t) = E F_nu(prod_j G_j^{(n)}(t))."""
    if samples < 100:
        raise ValueError("samples must be at least 100")
    if not t > 0:
        raise ValueError("t must be positive")
    sol = plan.base_solution(policy)
    if plan.divisor == 1:
        return MCEstimate(complex(evaluate_solution(sol, t)), 0.0, 0.0, samples, None)
    sampler = _product_sampler(plan.divisor, t)

    def draw(rng, size):
        return evaluate_solution(sol, sampler(rng, size))

    return monte_carlo(draw, samples, seed, threads=threads)


def subordinate_quadrature(plan: SubordinationPlan, t: float, abs_tol: float = 1e-11,
                           rel_tol: float = 1e-10, u_max: float = 8.0) -> complex:
    """n = 2: F_{nu/2}(t) = (2/sqrt(pi)) int_0^inf F_nu(2 sqrt(t) u) e^{-u^2} du.

    The range is cut at ``u_max`` (e^{-64} for the default).
    """
    if plan.divisor != 2:
        raise ValueError("the quadrature path is only available for n = 2")
    if not t > 0:
        raise ValueError("t must be positive")
    sol = plan.base_solution()
    a = 2.0 * math.sqrt(t)

    def integrand(u):
        return evaluate_solution(sol, a * u) * np.exp(-u * u)

    res = integrate(integrand, 0.0, u_max, abs_tol, rel_tol, breakpoints=(1.0, 2.0, 4.0))
    return complex(2.0 / math.sqrt(math.pi) * res.value)


def iterated_brownian_mc(base: CauchyProblem, k: int, t: float, samples: int, seed=None,
                         policy: TruncationPolicy = MC_POLICY, threads: int | None = None) -> MCEstimate:
    """Estimate F_{nu/2^k}(t) as E F_nu(T_k), T_0 = t, T_i = |B_i(2 T_{i-1})|.

    ``base`` is the associated problem of order nu (initial conditions
    padded for divisor 2^k, see :func:`build_associated_problem`).
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if samples < 100:
        raise ValueError("samples must be at least 100")
    if not t > 0:
        raise ValueError("t must be positive")
    sol = _fast_solution(base, policy)

    def draw(rng, size):
        T = np.full(size, float(t))
        for _ in range(k):
            T = np.sqrt(2.0 * T) * np.abs(rng.standard_normal(size))
        return evaluate_solution(sol, T)

    return monte_carlo(draw, samples, seed, threads=threads)


def ml_reciprocal_order_mc(n: int, h: int, x: float, samples: int, seed=None,
                           threads: int | None = None) -> MCEstimate:
    """E_{1/n, h}(x) from an expectation over independent Y_j ~ Gamma(j/n).

    With P = prod_j Y_j^{1/n},
    E_{1/n,h}(x) = x^{-n(h-1)} E[e^{n x P} - sum_{i < n(h-1)} (n x P)^i / i!].
    """
    if n < 2 or h < 1:
        raise ValueError("need n >= 2 and h >= 1")
    if h > 1 and x == 0:
        raise ValueError("x must be non-zero for h > 1")
    m = n * (h - 1)

    def draw(rng, size):
        P = np.ones(size)
        for j in range(1, n):
            P *= rng.gamma(j / n, 1.0, size) ** (1.0 / n)
        y = n * x * P
        v = np.exp(y)
        term = np.ones(size)
        for i in range(m):
            v -= term
            term = term * y / (i + 1)
        return v / x**m if m else v

    return monte_carlo(draw, samples, seed, threads=threads)
