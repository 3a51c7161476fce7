"""Finite-velocity random motions and their characteristic functions.

A particle starts at the origin with a velocity drawn from ``initial_dist``;
at each event of a Poisson process with rate ``rate`` it draws its next
velocity from the row of ``switch_matrix`` for the current one. The
characteristic function is E exp(+i <alpha, X(t)>) throughout.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import expm

from mlfrac._backend import kernels
from mlfrac.charpoly import RootFindingError, ZeroRootError
from mlfrac.mc import MCEstimate, monte_carlo, seed_sequence
from mlfrac.solver import CauchyProblem, n_conditions
from mlfrac.special import MLParams2, PoleError, ml2


@dataclass(frozen=True)
class MotionSpec:
    velocities: np.ndarray  # (M+1, d)
    rate: float
    initial_dist: np.ndarray
    switch_matrix: np.ndarray

    def __post_init__(self):
        v = np.atleast_2d(np.asarray(self.velocities, dtype=float))
        p = np.asarray(self.initial_dist, dtype=float)
        P = np.atleast_2d(np.asarray(self.switch_matrix, dtype=float))
        S = v.shape[0]
        if not self.rate > 0:
            raise ValueError("rate must be positive")
        if p.shape != (S,) or P.shape != (S, S):
            raise ValueError(f"{S} velocities need a length-{S} initial distribution and a {S}x{S} switch matrix")
        if np.any(p < 0) or np.any(p > 1) or abs(p.sum() - 1) > 1e-12:
            raise ValueError("initial_dist must be a probability vector")
        if np.any(P < 0) or np.any(P > 1) or np.any(np.abs(P.sum(axis=1) - 1) > 1e-12):
            raise ValueError("every row of switch_matrix must be a probability vector")
        for name, a in (("velocities", v), ("initial_dist", p), ("switch_matrix", P)):
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        object.__setattr__(self, "rate", float(self.rate))

    @property
    def n_states(self) -> int:
        return self.velocities.shape[0]

    @property
    def dim(self) -> int:
        return self.velocities.shape[1]

    def projections(self, alpha: Sequence[float]) -> np.ndarray:
        """a_k = <alpha, v_k>."""
        a = np.asarray(alpha, dtype=float)
        if a.shape != (self.dim,):
            raise ValueError(f"alpha must have {self.dim} components")
        return self.velocities @ a

    def to_json(self) -> dict:
        return {
            "velocities": self.velocities.tolist(),
            "rate": self.rate,
            "initial_dist": self.initial_dist.tolist(),
            "switch_matrix": self.switch_matrix.tolist(),
        }


@dataclass(frozen=True)
class MotionPath:
    switch_times: np.ndarray
    velocity_index: np.ndarray  # velocity on [0, T_1), [T_1, T_2), ...
    position: np.ndarray


def _cumulative(p: np.ndarray) -> np.ndarray:
    c = np.cumsum(p, axis=-1)
    c[..., -1] = 1.0
    return c


def simulate_path(spec: MotionSpec, t: float, rng: np.random.Generator) -> MotionPath:
    """One path on [0, t] with exponential inter-arrival times."""
    if t < 0:
        raise ValueError("t must be non-negative")
    times = []
    states = [int(rng.choice(spec.n_states, p=spec.initial_dist))]
    now = rng.exponential(1.0 / spec.rate)
    while now < t:
        times.append(now)
        states.append(int(rng.choice(spec.n_states, p=spec.switch_matrix[states[-1]])))
        now += rng.exponential(1.0 / spec.rate)
    edges = np.concatenate([[0.0], times, [t]])
    pos = (np.diff(edges)[:, None] * spec.velocities[states]).sum(axis=0)
    return MotionPath(np.array(times), np.array(states), pos)


def _draw_events(spec: MotionSpec, t: float, size: int, rng: np.random.Generator):
    # Poisson counts, then sorted uniform epochs per path: the same law as
    # exponential inter-arrival times, but vectorizable
    counts = rng.poisson(spec.rate * t, size).astype(np.int64)
    total = int(counts.sum())
    owner = np.repeat(np.arange(size), counts)
    epochs = rng.random(total) * t
    order = np.lexsort((epochs, owner))
    epochs = epochs[order]
    offsets = np.zeros(size, dtype=np.int64)
    np.cumsum(counts[:-1], out=offsets[1:])
    switch_u = rng.random(total)
    init_u = rng.random(size)
    return counts, offsets, epochs, owner, switch_u, init_u


def simulate_positions(spec: MotionSpec, times, size: int, rng: np.random.Generator) -> np.ndarray:
    """End positions of ``size`` independent paths.

    ``times`` may be a scalar (result shape (size, d)) or a sequence of
    times observed on the same paths (result shape (len(times), size, d)).
    """
    scalar = np.ndim(times) == 0
    ts = np.atleast_1d(np.asarray(times, dtype=float))
    if np.any(ts < 0):
        raise ValueError("times must be non-negative")
    tmax = float(ts.max())
    counts, offsets, epochs, owner, switch_u, init_u = _draw_events(spec, tmax, size, rng)
    cum_init = _cumulative(spec.initial_dist)
    cum_switch = _cumulative(spec.switch_matrix)
    out = np.empty((ts.size, size, spec.dim))
    for i, tau in enumerate(ts):
        if tau == tmax:
            c = counts
        else:
            c = np.bincount(owner[epochs <= tau], minlength=size).astype(np.int64)
        out[i] = kernels.motion_positions(c, offsets, epochs, switch_u, init_u, cum_init, cum_switch,
                                          spec.velocities, float(tau))
    return out[0] if scalar else out


def empirical_cf(spec: MotionSpec, t: float, alpha: Sequence[float], samples: int, seed=None,
                 threads: int | None = None) -> MCEstimate:
    """Monte Carlo E exp(i <alpha, X(t)>) with component standard errors."""
    if samples < 100:
        raise ValueError("samples must be at least 100")
    a = np.asarray(alpha, dtype=float)
    spec.projections(a)  # shape check

    def draw(rng, size):
        x = simulate_positions(spec, t, size, rng)
        return np.exp(1j * (x @ a))

    return monte_carlo(draw, samples, seed, threads=threads)


def empirical_cf_derivatives(spec: MotionSpec, alpha: Sequence[float], h: float, samples: int,
                             seed=None, threads: int | None = None) -> dict:
    """Finite-difference estimates of the first two t-derivatives of the cf at 0.

    Uses second-order one-sided stencils on the same paths observed at
    h, 2h, 3h (common random numbers keep the variance O(1)). Returns, for
    n = 1, 2, the estimate at step h, its standard error and a truncation
    estimate from comparison with step 2h.
    """
    a = np.asarray(alpha, dtype=float)
    stencils = {
        1: (np.array([-3.0, 4.0, -1.0]), 1),
        2: (np.array([2.0, -5.0, 4.0, -1.0]), 2),
    }
    out = {}
    for n, (w, order) in stencils.items():
        est = {}
        for step in (h, 2 * h):
            def draw(rng, size, step=step, w=w, order=order):
                ts = step * np.arange(1, len(w))
                x = simulate_positions(spec, ts, size, rng)
                phase = np.exp(1j * (x @ a))  # (len(w)-1, size)
                val = w[0] + np.tensordot(w[1:], phase, axes=1)
                return val / (2.0 * step if order == 1 else step**2)

            est[step] = monte_carlo(draw, samples, seed, threads=threads)
        e = est[h]
        # second-order stencils: error(2h) ~ 4 error(h)
        trunc = abs(est[2 * h].estimate - e.estimate) / 3.0
        out[n] = {"estimate": e.estimate, "std_error": e.std_error, "truncation": trunc, "mc": e}
    return out


def _segment_integral(a: float, b: float, m: int, tol: float = 1e-12) -> complex:
    """int_0^1 (i (a d + b (1 - d)))^m dd."""
    if abs(a - b) > tol:
        return (1j**m) * (a ** (m + 1) - b ** (m + 1)) / ((m + 1) * (a - b))
    return (1j * a) ** m


def cf_initial_derivative(spec: MotionSpec, alpha: Sequence[float], n: int) -> complex:
    """n-th t-derivative at 0 of the first-order short-time expansion of the cf.

    sum_k p_k (-n rate + i a_k)(i a_k)^{n-1}
      + n rate sum_{h,k} p_h p_hk int_0^1 (i(a_h d + a_k (1-d)))^{n-1} dd.

    At most one event is allowed in [0, t], so this agrees with the exact
    derivative (:func:`cf_derivative_exact`) for n <= 2. At n = 3 the
    neglected terms are rate^2 times first moments of the projected
    velocities; they vanish for the symmetric orthogonal and three-direction
    motions but not in general. From n = 4 on it differs in general.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    if n == 0:
        return 1.0 + 0j
    a = spec.projections(alpha)
    lam = spec.rate
    p = spec.initial_dist
    first = sum(p[k] * (-n * lam + 1j * a[k]) * (1j * a[k]) ** (n - 1) for k in range(spec.n_states))
    second = 0j
    for h in range(spec.n_states):
        for k in range(spec.n_states):
            w = p[h] * spec.switch_matrix[h, k]
            if w:
                second += w * _segment_integral(a[h], a[k], n - 1)
    return complex(first + n * lam * second)


def generator(spec: MotionSpec, alpha: Sequence[float]) -> np.ndarray:
    """Q with d/dt u = Q u, u_k(t) = E[exp(i <alpha, X(t)>); V(t) = v_k]."""
    a = spec.projections(alpha)
    S = spec.n_states
    return 1j * np.diag(a) + spec.rate * (spec.switch_matrix.T - np.eye(S))


def exact_cf(spec: MotionSpec, t: float, alpha: Sequence[float]) -> complex:
    """cf from the matrix exponential: 1^T expm(t Q) p."""
    Q = generator(spec, alpha)
    return complex(np.sum(expm(t * Q) @ spec.initial_dist))


def cf_derivative_exact(spec: MotionSpec, alpha: Sequence[float], n: int) -> complex:
    """n-th derivative at 0 of the cf, 1^T Q^n p."""
    Q = generator(spec, alpha)
    return complex(np.sum(np.linalg.matrix_power(Q, n) @ spec.initial_dist))


def short_time_cf(spec: MotionSpec, alpha: Sequence[float], t: float) -> complex:
    """First-order expansion allowing at most one event in [0, t]."""
    a = spec.projections(alpha)
    lam, p, P = spec.rate, spec.initial_dist, spec.switch_matrix
    val = (1 - lam * t) * np.sum(p * np.exp(1j * t * a))
    for h in range(spec.n_states):
        for k in range(spec.n_states):
            w = p[h] * P[h, k]
            if not w:
                continue
            if abs(a[h] - a[k]) * t > 1e-12:
                seg = (np.exp(1j * t * a[h]) - np.exp(1j * t * a[k])) / (1j * t * (a[h] - a[k]))
            else:
                seg = np.exp(1j * t * a[k])
            val += lam * t * w * seg
    return complex(val)


# -- orthogonal planar motion -----------------------------------------------


def orthogonal_motion(lam: float, c: float) -> MotionSpec:
    """Velocities c(cos k pi/2, sin k pi/2); each event turns left or right with probability 1/2."""
    k = np.arange(4)
    v = c * np.column_stack([np.cos(k * np.pi / 2), np.sin(k * np.pi / 2)])
    v[np.abs(v) < 1e-15] = 0.0
    P = np.zeros((4, 4))
    for i in range(4):
        P[i, (i + 1) % 4] = P[i, (i - 1) % 4] = 0.5
    return MotionSpec(v, lam, np.full(4, 0.25), P)


def orthogonal_coefficients(lam: float, c: float, alpha: float, beta: float) -> tuple:
    rho = alpha**2 + beta**2
    return (
        c**2 * (lam**2 * rho + c**2 * alpha**2 * beta**2),
        2 * lam * (lam**2 + c**2 * rho),
        5 * lam**2 + c**2 * rho,
        4 * lam,
        1.0,
    )


def orthogonal_AB(lam: float, c: float, alpha: float, beta: float) -> tuple:
    """A = sqrt(lam^2 - c^2 (alpha - beta)^2), B = sqrt(lam^2 - c^2 (alpha + beta)^2) (complex sqrt)."""
    A = cmath.sqrt(lam**2 - c**2 * (alpha - beta) ** 2)
    B = cmath.sqrt(lam**2 - c**2 * (alpha + beta) ** 2)
    return A, B


def orthogonal_roots(lam: float, c: float, alpha: float, beta: float) -> list:
    """eta_1..eta_4 = -lam - (A+B)/2, -lam + (A-B)/2, -lam - (A-B)/2, -lam + (A+B)/2."""
    A, B = orthogonal_AB(lam, c, alpha, beta)
    return [-lam - (A + B) / 2, -lam + (A - B) / 2, -lam - (A - B) / 2, -lam + (A + B) / 2]


def orthogonal_initial_conditions(lam: float, c: float, alpha: float, beta: float) -> tuple:
    rho = alpha**2 + beta**2
    return (1.0, 0.0, -(c**2) * rho / 2, lam * c**2 * rho / 2)


def _match_multiset(found: Sequence[complex], mults: Sequence[int], expected: Sequence[complex],
                    tol: float) -> bool:
    pool = list(expected)
    for r, m in zip(found, mults):
        for _ in range(m):
            j = min(range(len(pool)), key=lambda i: abs(pool[i] - r))
            if abs(pool[j] - r) > tol * max(1.0, abs(r)):
                return False
            pool.pop(j)
    return not pool


def orthogonal_problem(lam: float, c: float, alpha: float, beta: float, nu: float,
                       cluster_radius: float = 1e-6) -> CauchyProblem:
    """Fractional quartic problem of the orthogonal motion, 0 < nu <= 1.

    Roots come from the numerical root finder and are cross-checked against
    the closed-form roots. The default cluster radius is wider than the
    library default because double roots (A = 0 or B = 0) are common here.
    """
    if not (lam > 0 and c > 0):
        raise ValueError("lambda and c must be positive")
    if alpha == 0 and beta == 0:
        raise ZeroRootError("alpha = beta = 0 gives lambda_0 = 0")
    if not 0 < nu <= 1:
        raise ValueError("only the four conditions for 0 < nu <= 1 are available")
    coeffs = orthogonal_coefficients(lam, c, alpha, beta)
    conds = orthogonal_initial_conditions(lam, c, alpha, beta)[: n_conditions(nu, 4)]
    p = CauchyProblem.build(nu, coeffs, conds, cluster_radius=cluster_radius)
    if not _match_multiset(p.spectrum.roots, p.spectrum.mults, orthogonal_roots(lam, c, alpha, beta), 1e-5):
        raise RootFindingError("numerical roots disagree with the closed-form roots")
    return p


def orthogonal_cf_nu1(lam: float, c: float, alpha: float, beta: float, t: float) -> complex:
    """(1/4) sum (1 +- lam/A)(1 +- lam/B) E_{1,1}(eta t) over the four roots."""
    if alpha == 0 and beta == 0:
        raise ValueError("(alpha, beta) must be non-zero")
    A, B = orthogonal_AB(lam, c, alpha, beta)
    if abs(A) < 1e-12 or abs(B) < 1e-12:
        raise PoleError("A or B vanishes: repeated roots, use the general solution")
    eta = orthogonal_roots(lam, c, alpha, beta)
    w = [
        (1 - lam / A) * (1 - lam / B),
        (1 + lam / A) * (1 - lam / B),
        (1 - lam / A) * (1 + lam / B),
        (1 + lam / A) * (1 + lam / B),
    ]
    p = MLParams2(1.0, 1.0)
    return complex(sum(wi * ml2(p, e * t) for wi, e in zip(w, eta)) / 4)


# -- three-direction planar motion ------------------------------------------


def three_direction_velocities(c: float) -> np.ndarray:
    s = math.sqrt(3.0) * c / 2
    return np.array([[c, 0.0], [-c / 2, s], [-c / 2, -s]])


def three_direction_motion(lam: float, c: float) -> MotionSpec:
    """Uniform start and uniform switching (current direction included).

    The event rate is 9 lam / 4, which is the rate whose characteristic
    function obeys the cubic of :func:`three_direction_problem` with
    parameter ``lam`` (equivalently: a change to a different direction at
    rate 3 lam / 2).
    """
    return MotionSpec(three_direction_velocities(c), 9 * lam / 4, np.full(3, 1 / 3), np.full((3, 3), 1 / 3))


def three_direction_coefficients(lam: float, c: float, alpha: float, beta: float) -> tuple:
    rho = alpha**2 + beta**2
    lam0 = 9 * lam * c**2 * rho / 8 - 3j * c**3 * alpha * beta**2 / 4 + 1j * c**3 * alpha**3 / 4
    return (lam0, (3 / 2) ** 4 * lam**2 + 3 * c**2 * rho / 4, 9 * lam / 2, 1.0)


def three_direction_problem(lam: float, c: float, alpha: float, beta: float, nu: float) -> CauchyProblem:
    """Fractional cubic problem of the three-direction motion, 0 < nu <= 1.

    The odd-in-alpha part of lambda_0 carries the sign that matches
    E exp(+i <alpha, X>).
    """
    if not (lam > 0 and c > 0):
        raise ValueError("lambda and c must be positive")
    if not 0 < nu <= 1:
        raise ValueError("only the three conditions for 0 < nu <= 1 are available")
    coeffs = three_direction_coefficients(lam, c, alpha, beta)
    if coeffs[0] == 0:
        raise ZeroRootError("lambda_0 = 0 (alpha = beta = 0)")
    rho = alpha**2 + beta**2
    conds = (1.0, 0.0, -(c**2) * rho / 2)[: n_conditions(nu, 3)]
    return CauchyProblem.build(nu, coeffs, conds)


# -- telegraph decomposition ------------------------------------------------


def telegraph_motion(lam: float, c: float) -> MotionSpec:
    """One-dimensional motion with velocities +-c, flipping at every event."""
    return MotionSpec(np.array([[c], [-c]]), lam, np.array([0.5, 0.5]), np.array([[0.0, 1.0], [1.0, 0.0]]))


@dataclass(frozen=True)
class DecompositionReport:
    grid: tuple  # (alpha, beta) pairs
    direct: tuple  # MCEstimate per point
    composed: tuple
    max_discrepancy: float
    max_sigma: float  # largest |difference| in combined standard errors
    passed: bool


def telegraph_decomposition_check(lam: float, c: float, t: float, samples: int, seed=None,
                                  grid: Sequence[tuple] | None = None, k: float = 3.0) -> DecompositionReport:
    """Compare (U+V, U-V), U and V independent telegraph motions (speed c/2,
    rate lam/2), with directly simulated orthogonal motion via their
    empirical joint cf on a grid of (alpha, beta)."""
    if samples < 10_000:
        raise ValueError("samples must be at least 10^4")
    grid = tuple(grid) if grid is not None else ((1.0, 0.0), (0.0, 1.0), (1.0, 0.5), (-0.7, 1.3), (2.0, 1.0))
    ss = seed_sequence(seed)
    s_direct, s_u, s_v = ss.spawn(3)
    orth = orthogonal_motion(lam, c)
    tel = telegraph_motion(lam / 2, c / 2)
    # positions are simulated once per stream and reused across the grid
    xd = simulate_positions(orth, t, samples, np.random.default_rng(s_direct))
    u = simulate_positions(tel, t, samples, np.random.default_rng(s_u))[:, 0]
    v = simulate_positions(tel, t, samples, np.random.default_rng(s_v))[:, 0]
    xc = np.column_stack([u + v, u - v])
    direct, composed = [], []
    worst = worst_sigma = 0.0
    for a, b in grid:
        ab = np.array([a, b], dtype=float)
        ests = []
        for x in (xd, xc):
            z = np.exp(1j * (x @ ab))
            m = z.mean()
            se_re = z.real.std(ddof=1) / math.sqrt(samples)
            se_im = z.imag.std(ddof=1) / math.sqrt(samples)
            ests.append(MCEstimate(complex(m), float(se_re), float(se_im), samples, None))
        d, q = ests
        direct.append(d)
        composed.append(q)
        diff = abs(d.estimate - q.estimate)
        se = math.hypot(d.std_error, q.std_error)
        worst = max(worst, diff)
        worst_sigma = max(worst_sigma, diff / se if se > 0 else (0.0 if diff < 1e-12 else math.inf))
    return DecompositionReport(tuple(grid), tuple(direct), tuple(composed), worst, worst_sigma, worst_sigma <= k)
