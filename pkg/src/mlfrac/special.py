"""Two-parameter, Prabhakar and multivariate Mittag-Leffler functions.

All functions are evaluated by their power series. Each series is summed
term by term until a geometric bound on the remaining tail, built from a
positive majorant of the coefficients, falls below the requested tolerance.
There is no asymptotic regime. Points where cancellation between terms
would cost more than ``max_loss`` are re-summed in multiprecision, and
arguments large enough to exhaust ``max_terms`` raise
:class:`MLConvergenceError`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy import special as sc

from mlfrac import _mp
from mlfrac._backend import kernels

_EPS = np.finfo(float).eps


class PoleError(ValueError):
    """Gamma function evaluated at a non-positive integer."""


class MLConvergenceError(ArithmeticError):
    """A series could not be summed to the requested accuracy."""


@dataclass(frozen=True)
class TruncationPolicy:
    """Stopping rule and accuracy guard for the series.

    After the double-precision pass, ``eps * sum |term| * (1 + |exponent|)``
    estimates the rounding error. Where it exceeds ``max_loss * max(1,
    |value|)`` the point is re-summed in mpmath with enough extra digits
    (``escalate``), or :class:`MLConvergenceError` is raised.
    """

    abs_tol: float = 1e-14
    rel_tol: float = 1e-12
    max_terms: int = 2000
    max_loss: float = 1e-10
    escalate: bool = True

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("abs_tol and rel_tol must be positive")
        if self.max_terms < 1:
            raise ValueError("max_terms must be >= 1")
        if not self.max_loss > 0:
            raise ValueError("max_loss must be positive")


DEFAULT_POLICY = TruncationPolicy()


@dataclass(frozen=True)
class MLParams2:
    nu: float
    delta: complex

    def __post_init__(self):
        if not self.nu > 0:
            raise ValueError(f"nu must be positive, got {self.nu}")
        if not complex(self.delta).real > 0:
            raise ValueError(f"Re(delta) must be positive, got {self.delta}")


@dataclass(frozen=True)
class MLParamsPrabhakar:
    nu: float
    delta: complex
    gamma: complex

    def __post_init__(self):
        if not self.nu > 0:
            raise ValueError(f"nu must be positive, got {self.nu}")
        if not complex(self.gamma).real > 0:
            raise ValueError(f"Re(gamma) must be positive, got {self.gamma}")


@dataclass(frozen=True)
class MLParamsMultivariate:
    nu: float
    delta: complex
    gammas: tuple

    def __post_init__(self):
        object.__setattr__(self, "gammas", tuple(self.gammas))
        if not self.nu > 0:
            raise ValueError(f"nu must be positive, got {self.nu}")
        if len(self.gammas) < 1:
            raise ValueError("at least one gamma is required")
        if any(not complex(g).real > 0 for g in self.gammas):
            raise ValueError(f"every Re(gamma_j) must be positive, got {self.gammas}")


def _is_pole(z: complex) -> bool:
    return z.imag == 0 and z.real <= 0 and z.real == math.floor(z.real)


def log_gamma(z: complex) -> complex:
    """Principal branch of log Gamma(z)."""
    z = complex(z)
    if _is_pole(z):
        raise PoleError(f"Gamma has a pole at {z.real:g}")
    return complex(sc.loggamma(z))


def rgamma(z):
    """1/Gamma(z), zero at the poles."""
    return sc.rgamma(z)


# -- coefficient tables (cached, read-only) ---------------------------------


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@lru_cache(maxsize=512)
def _log_denominators(nu: float, delta: complex, K: int) -> np.ndarray:
    x = nu * np.arange(K) + delta
    g = sc.loggamma(x.astype(np.complex128))
    poles = (x.imag == 0) & (x.real <= 0) & (x.real == np.floor(x.real))
    g[poles] = np.inf
    return _frozen(g)


@lru_cache(maxsize=128)
def _log_majorant(G: float, K: int) -> np.ndarray:
    # log of (G)_k / k! with G >= 1: non-increasing coefficient ratios
    G = max(G, 1.0)
    k = np.arange(K)
    return _frozen(sc.gammaln(G + k) - sc.gammaln(G) - sc.gammaln(k + 1.0))


@lru_cache(maxsize=256)
def _pochhammer_ratios(gamma: complex, K: int) -> np.ndarray:
    """(gamma)_k / k! for k < K."""
    k = np.arange(1, K)
    c = np.ones(K, dtype=np.complex128)
    c[1:] = np.cumprod((gamma + k - 1) / k)
    return _frozen(c)


def _kmin(nu: float, delta: complex) -> int:
    # from here on Gamma ratios decrease and no pole can occur
    need = 2.0 + abs(delta.imag) - delta.real
    return max(0, math.ceil(need / nu)) if need > 0 else 0


def _table_size(nu: float, delta: complex, G: float, R: float, policy: TruncationPolicy) -> int:
    """Smallest power-of-two table that lets every |w| <= R terminate."""
    if R == 0:
        return 2
    # the size is monotone in R, so rounding R up to a 2^(1/8) grid is safe
    # and lets repeated calls on nearby radii share one cached answer; near
    # the max_terms limit the exact radius decides
    try:
        return _table_size_cached(nu, delta, G, 2.0 ** (math.ceil(8.0 * math.log2(R)) / 8.0), policy)
    except MLConvergenceError:
        return _table_size_cached.__wrapped__(nu, delta, G, R, policy)


@lru_cache(maxsize=1024)
def _table_size_cached(nu: float, delta: complex, G: float, R: float, policy: TruncationPolicy) -> int:
    kmin = _kmin(nu, delta)
    la = math.log(R)
    K = 64
    while True:
        g = _log_denominators(nu, delta, K).real
        logt = _log_majorant(G, K) + np.arange(K) * la - g
        with np.errstate(invalid="ignore", over="ignore", divide="ignore"):
            rho = np.exp(logt[1:] - logt[:-1])
            tail = np.exp(logt[1:]) / (1.0 - rho)
        k = np.arange(K - 1)
        hit = np.flatnonzero((k >= kmin) & np.isfinite(logt[:-1]) & (rho < 1) & (tail <= policy.abs_tol))
        if hit.size:
            if int(hit[0]) + 1 > policy.max_terms:
                break
            return K
        if K > policy.max_terms:
            break
        K *= 2
    raise MLConvergenceError(
        f"series needs more than max_terms={policy.max_terms} terms at |z|={R:g} (nu={nu:g})"
    )


# Coefficient sequences are described by hashable specs so both the double
# and the multiprecision paths can build them:
#   ("ones",)                 1
#   ("prab", gamma)           (gamma)_k / k!
#   ("multi", gammas, u)      degree-k coefficient of prod_j (1 - u_j x)^(-gamma_j)


@lru_cache(maxsize=256)
def _coeffs(spec: tuple, K: int) -> np.ndarray:
    if spec[0] == "ones":
        return _frozen(np.ones(K, dtype=np.complex128))
    if spec[0] == "prab":
        return _pochhammer_ratios(spec[1], K)
    return _frozen(_degree_coefficients(spec[1], np.array(spec[2]), K))


def _coeffs_mp(ctx, spec: tuple, K: int) -> list:
    if spec[0] == "ones":
        return [ctx.mpf(1)] * K

    def poch(g, u=1):
        g, u = ctx.mpc(g), ctx.mpc(u)
        out = [ctx.mpf(1)]
        for k in range(1, K):
            out.append(out[-1] * (g + k - 1) / k * u)
        return out

    if spec[0] == "prab":
        return poch(spec[1])
    return _product_coeffs_mp(ctx, spec[1], spec[2], K)


def _product_coeffs_mp(ctx, gammas, us, K: int) -> list:
    """Taylor coefficients of P = prod_j (1 - u_j x)^(-gamma_j), O(K M).

    With Q = prod_j (1 - u_j x) and R = sum_j gamma_j u_j prod_{i != j}(1 - u_i x),
    P'/P = R/Q gives (k+1) a_{k+1} = sum_i r_i a_{k-i} - sum_{i>=1} q_i (k+1-i) a_{k+1-i}.
    """
    us = [ctx.mpc(u) for u in us]
    gammas = [ctx.mpc(g) for g in gammas]

    def mul(a, b):
        out = [ctx.mpf(0)] * (len(a) + len(b) - 1)
        for i, x in enumerate(a):
            for j, y in enumerate(b):
                out[i + j] += x * y
        return out

    q = [ctx.mpf(1)]
    for u in us:
        q = mul(q, [ctx.mpf(1), -u])
    r = [ctx.mpf(0)] * len(us)
    for j, (g, u) in enumerate(zip(gammas, us)):
        part = [g * u]
        for i, v in enumerate(us):
            if i != j:
                part = mul(part, [ctx.mpf(1), -v])
        for i, x in enumerate(part):
            r[i] += x
    a = [ctx.mpf(1)]
    M = len(us)
    for k in range(K - 1):
        acc = ctx.fsum(r[i] * a[k - i] for i in range(min(M, k + 1)))
        acc -= ctx.fsum(q[i] * (k + 1 - i) * a[k + 1 - i] for i in range(1, min(M, k + 1) + 1))
        a.append(acc / (k + 1))
    return a


def _rgamma_steps(ctx, nu: float, dm, K: int):
    """Yield 1/Gamma(nu k + delta) for k = 0..K-1 in the context ``ctx``."""
    if float(nu).is_integer():
        # 1/Gamma(nu(k+1)+delta) from 1/Gamma(nu k+delta) by nu factors
        m = int(nu)
        r = ctx.rgamma(dm)
        for k in range(K):
            yield r
            base = m * k + dm
            for i in range(m):
                r /= base + i
    else:
        nu_m = ctx.mpf(nu)
        for k in range(K):
            yield ctx.rgamma(nu_m * k + dm)


def _sum_mp(nu: float, delta: complex, spec: tuple, w: complex, K: int, logb: np.ndarray,
            g: np.ndarray, kmin: int, policy: TruncationPolicy, digits: int) -> tuple:
    """Multiprecision re-summation at one point.

    The stopping index is chosen here, from the accurate partial sum: under
    heavy cancellation the double-precision sum is noise, so its stopping
    index cannot be reused. If the observed cancellation exceeds what
    ``digits`` covers, the sum is repeated with more digits. Returns the
    value and the number of terms used.
    """
    la = math.log(abs(w)) if w != 0 else -math.inf
    while True:
        # bucket sizes so coefficient tables are reused between points
        digits = -(-digits // 8) * 8
        ctx = _mp.context(digits)
        store = _mp.cache()
        key = (spec, K, digits)
        c = store.get(key)
        if c is None:
            c = store[key] = _coeffs_mp(ctx, spec, K)
        wm = ctx.mpc(w)
        total = ctx.mpf(0)
        peak = 0.0
        p = ctx.mpf(1)
        done = False
        for k, r in enumerate(_rgamma_steps(ctx, nu, ctx.mpc(delta), K)):
            term = c[k] * p * r
            total += term
            peak = max(peak, float(abs(term)))
            p *= wm
            if k < kmin or k + 1 >= K or w == 0:
                if w == 0:
                    done = True
                    break
                continue
            log_tk = logb[k] + k * la - g[k].real
            if not math.isfinite(log_tk):
                continue
            lr = logb[k + 1] - logb[k] - (g[k + 1].real - g[k].real) + la
            if lr < 0:
                tail = math.exp(log_tk + lr) / (1.0 - math.exp(lr))
                if tail <= max(policy.abs_tol, policy.rel_tol * float(abs(total))):
                    done = True
                    break
        if not done:
            raise MLConvergenceError(f"series did not converge at z={w} within {K} terms")
        size = float(abs(total))
        lost = math.log10(peak / size) if size > 0 and peak > size else 0.0
        if digits >= lost + 18:
            return complex(total), k + 1
        digits = int(lost + 24)


def _sum_series(nu, delta, G, spec, w, policy):
    """Evaluate sum_k c_k w^k / Gamma(nu k + delta) for an array w."""
    w = np.asarray(w, dtype=np.complex128)
    flat = w.ravel()
    R = float(np.max(np.abs(flat))) if flat.size else 0.0
    K = _table_size(nu, delta, G, R, policy)
    out, errsum, nterms, ok = kernels.series_sum(
        _coeffs(spec, K), _log_denominators(nu, delta, K), _log_majorant(G, K), flat,
        _kmin(nu, delta), policy.abs_tol, policy.rel_tol,
    )
    if not np.all(ok):
        bad = flat[~ok][0]
        raise MLConvergenceError(f"series did not converge at z={bad} within {K} terms")
    loss = _EPS * errsum
    lossy = np.flatnonzero(loss > policy.max_loss * np.maximum(1.0, np.abs(out)))
    if lossy.size and not policy.escalate:
        j = int(lossy[0])
        raise MLConvergenceError(
            f"cancellation at z={flat[j]}: rounding estimate {loss[j]:.2e} exceeds max_loss"
        )
    if lossy.size:
        logb, g, kmin = _log_majorant(G, K), _log_denominators(nu, delta, K), _kmin(nu, delta)
    for j in lossy:
        # the double-precision sum may itself be noise, so the first guess
        # at the digits needed is checked inside the multiprecision pass
        lost = math.log10(max(loss[j] / _EPS, 1.0) / max(abs(out[j]), 1e-300))
        digits = int(20 + min(max(lost, 0.0), 200.0))
        out[j], nterms[j] = _sum_mp(nu, delta, spec, complex(flat[j]), K, logb, g, kmin, policy, digits)
        loss[j] = _EPS * abs(out[j])
    info = {
        "terms": int(nterms.max()) if nterms.size else 0,
        "rounding": float(loss.max()) if loss.size else 0.0,
        "escalated": int(lossy.size),
    }
    return out.reshape(w.shape), info


def _wrap(value, z, info, full_output):
    if np.ndim(z) == 0:
        value = complex(value.reshape(()))
    return (value, info) if full_output else value


def ml2(params: MLParams2, z, policy: TruncationPolicy | None = None, full_output: bool = False):
    """Two-parameter Mittag-Leffler function E_{nu,delta}(z).

    ``z`` may be a scalar or an array. With ``full_output`` a dict with the
    number of terms used and the rounding estimate is returned as well.
    """
    policy = policy or DEFAULT_POLICY
    delta = complex(params.delta)
    if params.nu == 1 and delta.imag == 0 and delta.real == int(delta.real):
        value, info = _ml2_exponential(int(delta.real), z, policy)
    else:
        value, info = _sum_series(params.nu, delta, 1.0, ("ones",), z, policy)
    return _wrap(value, z, info, full_output)


def _ml2_exponential(d: int, z, policy: TruncationPolicy):
    """E_{1,d}(z) = z^{1-d} (e^z - sum_{i<d-1} z^i/i!) where that is accurate, series elsewhere.

    For large |z| the series cancels badly while this identity does not;
    for small |z| it is the other way round. Each point keeps whichever
    has the smaller rounding estimate.
    """
    z_arr = np.asarray(z, dtype=np.complex128)
    flat = z_arr.ravel()
    m = d - 1
    out = np.empty(flat.shape, dtype=np.complex128)
    use = np.abs(flat) > max(4.0, 2.0 * m)
    if use.any():
        x = flat[use]
        with np.errstate(over="ignore", invalid="ignore"):
            ex = np.exp(x)
            poly = np.zeros_like(x)
            scale = np.abs(ex)
            term = np.ones_like(x)
            for i in range(m):
                poly += term
                scale += np.abs(term)
                term = term * x / (i + 1)
            val = (ex - poly) / x**m
            loss = _EPS * (m + 2) * scale / np.abs(x) ** m
        good = np.isfinite(val) & (loss <= policy.max_loss * np.maximum(1.0, np.abs(val)))
        idx = np.flatnonzero(use)
        out[idx[good]] = val[good]
        use[idx[~good]] = False
    info = {"terms": 0, "rounding": 0.0, "escalated": 0}
    rest = ~use
    if rest.any():
        out[rest], info = _sum_series(1.0, complex(d), 1.0, ("ones",), flat[rest], policy)
    return out.reshape(z_arr.shape), info


def ml_prabhakar(params: MLParamsPrabhakar, z, policy: TruncationPolicy | None = None,
                 full_output: bool = False):
    """Three-parameter (Prabhakar) function E^gamma_{nu,delta}(z)."""
    policy = policy or DEFAULT_POLICY
    gamma = complex(params.gamma)
    value, info = _sum_series(params.nu, complex(params.delta), abs(gamma), ("prab", gamma), z, policy)
    return _wrap(value, z, info, full_output)


def _degree_coefficients(gammas: Sequence[complex], u: np.ndarray, K: int) -> np.ndarray:
    """Coefficients of x^s in prod_j (1 - u_j x)^(-gamma_j), s < K."""
    c = np.zeros(K, dtype=np.complex128)
    c[0] = 1.0
    for gj, uj in zip(gammas, u):
        a = _pochhammer_ratios(complex(gj), K) * uj ** np.arange(K)
        c = np.convolve(c, a)[:K]
    return c


def ml_multivariate_scaled(params: MLParamsMultivariate, eta: Sequence[complex], x,
                           policy: TruncationPolicy | None = None, full_output: bool = False):
    """E^{(gammas)}_{nu,delta}(eta_1 x, ..., eta_M x) for scalar or array ``x``.

    Terms are grouped by total degree s: the degree-s coefficient is the
    convolution of the per-variable sequences, so a single index controls
    truncation. The roots are normalised by R = max|eta_j| and R is folded
    into the argument.
    """
    policy = policy or DEFAULT_POLICY
    eta = np.asarray(eta, dtype=np.complex128).ravel()
    if eta.size != len(params.gammas):
        raise ValueError(f"expected {len(params.gammas)} arguments, got {eta.size}")
    R = float(np.max(np.abs(eta)))
    u = eta / R if R > 0 else np.zeros_like(eta)
    G = float(sum(abs(complex(g)) for g in params.gammas))
    x_arr = np.asarray(x, dtype=np.complex128)
    spec = ("multi", tuple(complex(g) for g in params.gammas), tuple(complex(v) for v in u))
    value, info = _sum_series(params.nu, complex(params.delta), G, spec, R * x_arr, policy)
    return _wrap(value, x, info, full_output)


def ml_multivariate(params: MLParamsMultivariate, z: Sequence[complex],
                    policy: TruncationPolicy | None = None, full_output: bool = False):
    """Multivariate function E^{(gamma_1..gamma_M)}_{nu,delta}(z_1, ..., z_M)."""
    z = list(z)
    if len(z) != len(params.gammas):
        raise ValueError(f"expected {len(params.gammas)} arguments, got {len(z)}")
    if len(z) == 1:
        return ml_prabhakar(
            MLParamsPrabhakar(params.nu, params.delta, params.gammas[0]), complex(z[0]),
            policy, full_output,
        )
    return ml_multivariate_scaled(params, z, 1.0, policy, full_output)


def ml_shift_identity(nu: float, l: complex, n: int, z, policy: TruncationPolicy | None = None):
    """E_{nu, n*nu + l}(z) from E_{nu,l}(z)/z^n minus the first n series terms.

    Independent route to :func:`ml2` used as a cross-check; ``1/Gamma`` is
    taken as zero at its poles.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    policy = policy or DEFAULT_POLICY
    z_arr = np.asarray(z, dtype=np.complex128)
    if np.any(z_arr == 0):
        raise ValueError("z must be non-zero")
    l = complex(l)
    base, _ = _sum_series(nu, l, 1.0, ("ones",), z_arr, policy)
    out = base / z_arr**n
    for j in range(1, n + 1):
        out = out - z_arr ** (-j) * rgamma((n - j) * nu + l)
    return complex(out) if np.ndim(z) == 0 else out
