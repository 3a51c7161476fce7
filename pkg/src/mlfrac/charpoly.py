"""Characteristic polynomials, their clustered roots and residue weights.

Coefficients are stored in increasing degree, ``coeffs[k]`` multiplying x^k.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.polynomial import polynomial as P

_EPS = np.finfo(float).eps


class ZeroRootError(ValueError):
    """The polynomial has a root at (or numerically near) zero."""


class MultiplicityError(ValueError):
    """An operation that needs simple roots received a multiple one."""


class RootFindingError(ArithmeticError):
    """Root iteration failed or the roots do not reproduce the polynomial."""


@dataclass(frozen=True)
class CharPolynomial:
    """sum_k coeffs[k] x^k with a non-zero leading coefficient."""

    coeffs: tuple

    def __post_init__(self):
        c = tuple(complex(v) for v in self.coeffs)
        if len(c) < 2:
            raise ValueError("degree must be at least 1")
        if c[-1] == 0:
            raise ValueError("leading coefficient must be non-zero")
        object.__setattr__(self, "coeffs", c)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def array(self) -> np.ndarray:
        return np.array(self.coeffs, dtype=np.complex128)

    def monic(self) -> np.ndarray:
        a = self.array
        return a / a[-1]

    def __call__(self, x):
        return P.polyval(x, self.array)


@dataclass(frozen=True)
class RootSpectrum:
    """Distinct non-zero roots with their multiplicities."""

    roots: tuple
    mults: tuple
    allow_zero: bool = False

    def __post_init__(self):
        r = tuple(complex(v) for v in self.roots)
        m = tuple(int(v) for v in self.mults)
        if len(r) != len(m) or not r:
            raise ValueError("roots and mults must be non-empty and of equal length")
        if any(v < 1 for v in m):
            raise ValueError("multiplicities must be positive integers")
        if not self.allow_zero and any(v == 0 for v in r):
            raise ZeroRootError("roots must be non-zero")
        if len(set(r)) != len(r):
            raise ValueError("roots must be pairwise distinct; merge them into multiplicities")
        object.__setattr__(self, "roots", r)
        object.__setattr__(self, "mults", m)

    @property
    def degree(self) -> int:
        return sum(self.mults)

    @property
    def simple(self) -> bool:
        return all(v == 1 for v in self.mults)

    def expand(self) -> np.ndarray:
        """Coefficients (increasing degree) of prod_j (x - eta_j)^m_j."""
        return expand_roots(self.roots, self.mults)

    def check(self, poly: CharPolynomial, rtol: float = 1e-8) -> float:
        """Max coefficient error against ``poly`` made monic, relative to its norm.

        Raises RootFindingError when it exceeds ``rtol``.
        """
        if self.degree != poly.degree:
            raise RootFindingError(
                f"spectrum has total multiplicity {self.degree}, polynomial degree is {poly.degree}"
            )
        target = poly.monic()
        err = float(np.max(np.abs(self.expand() - target)) / np.max(np.abs(target)))
        if not err <= rtol:
            raise RootFindingError(f"roots do not reproduce the polynomial (relative error {err:.2e})")
        return err

    def to_json(self) -> dict:
        return {"roots": [[z.real, z.imag] for z in self.roots], "mults": list(self.mults)}


def expand_roots(roots: Sequence[complex], mults: Sequence[int] | None = None) -> np.ndarray:
    """Monic coefficients, increasing degree, of prod (x - r)^m."""
    if mults is None:
        mults = [1] * len(roots)
    c = np.array([1.0 + 0j])
    for r, m in zip(roots, mults):
        for _ in range(m):
            c = P.polymul(c, [-complex(r), 1.0])
    return c


def _aberth(a: np.ndarray, max_iter: int, tol: float):
    """Simultaneous Aberth iteration on the monic polynomial ``a``.

    Returns the approximations and whether the correction test was met.
    """
    n = len(a) - 1
    da = P.polyder(a)
    # start on a circle around the root centroid, radius from the coefficient bound
    centre = -a[n - 1] / n
    shifted = P.polyval(centre, a)
    radius = max(abs(shifted) ** (1.0 / n), 1e-3)
    for k in range(1, n):
        radius = max(radius, abs(a[n - k]) ** (1.0 / k) if abs(a[n - k]) > 0 else 0)
    angles = 2 * np.pi * np.arange(n) / n + 0.4
    z = centre + radius * np.exp(1j * angles) * (1 + 0.01 * np.arange(n) / n)
    for _ in range(max_iter):
        pv = P.polyval(z, a)
        dv = P.polyval(z, da)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = pv / dv
            diff = z[:, None] - z[None, :]
            np.fill_diagonal(diff, 1.0)
            inv = 1.0 / diff
            np.fill_diagonal(inv, 0.0)
            s = inv.sum(axis=1)
            w = ratio / (1.0 - ratio * s)
        w = np.where(pv == 0, 0, w)
        if not np.all(np.isfinite(w)):
            # an iterate hit a critical point; nudge it and carry on
            w = np.where(np.isfinite(w), w, 1e-8 * (1 + np.abs(z)))
        z = z - w
        if np.all(np.abs(w) < tol * (1 + np.abs(z))):
            return z, True
    return z, False


def _at_rounding_level(a: np.ndarray, z: np.ndarray, factor: float = 1e3) -> bool:
    pv = np.abs(P.polyval(z, a))
    scale = P.polyval(np.abs(z), np.abs(a))
    return bool(np.all(pv <= factor * _EPS * a.size * scale))


def _cluster(z: np.ndarray, radius: float):
    """Single-linkage clusters of points closer than ``radius``."""
    n = len(z)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(z[i] - z[j]) < radius:
                parent[find(i)] = find(j)
    groups: dict = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return list(groups.values())


def _polish(a: np.ndarray, z0: complex, m: int, steps: int = 8) -> complex:
    """Newton steps on p^(m-1), which has a simple root at an m-fold root of p."""
    q = P.polyder(a, m - 1) if m > 1 else a
    dq = P.polyder(q)
    z = z0
    for _ in range(steps):
        d = P.polyval(z, dq)
        if d == 0:
            break
        step = P.polyval(z, q) / d
        z_new = z - step
        if abs(step) > 1e-3 * (1 + abs(z0)):
            break  # polishing should only touch the last digits
        z = z_new
        if abs(step) <= _EPS * (1 + abs(z)):
            break
    return z


def find_roots(p: CharPolynomial, cluster_radius: float = 1e-7, max_iter: int = 200,
               tol: float = 1e-14, allow_zero: bool = False) -> RootSpectrum:
    """Roots of ``p`` with multiplicities.

    Aberth iteration from perturbed-circle starts, then roots closer than
    ``cluster_radius`` are merged (centroid, summed multiplicity) and
    polished by Newton steps. Multiple roots stall the correction test well
    above ``tol``; the result is then accepted when the residual is at
    rounding level, and the reconstruction check decides.

    With ``allow_zero`` exact zero roots (vanishing low-order coefficients)
    are deflated and reported as the root 0.

    Raises
    ------
    ZeroRootError
        If a root lies within ``cluster_radius`` of 0 and ``allow_zero`` is
        false.
    RootFindingError
        On non-convergence or a failed reconstruction check (1e-8 relative).
    """
    if not cluster_radius > 0:
        raise ValueError("cluster_radius must be positive")
    full = p.monic()
    nzero = int(np.argmax(full != 0))
    if nzero and not allow_zero:
        raise ZeroRootError("lambda_0 = 0, so x = 0 is a root")
    a = full[nzero:]
    roots, mults = [], []
    if nzero:
        roots.append(0j)
        mults.append(nzero)
    if len(a) == 1:
        z, converged = np.zeros(0, dtype=complex), True
    elif len(a) == 2:
        z, converged = np.array([-a[0]]), True
    else:
        z, converged = _aberth(a, max_iter, tol)
    if not converged and not _at_rounding_level(a, z):
        raise RootFindingError(f"Aberth iteration did not converge in {max_iter} iterations")

    for group in _cluster(z, cluster_radius):
        m = len(group)
        c = complex(np.mean(z[group]))
        roots.append(_polish(a, c, m))
        mults.append(m)
    if not np.any(np.iscomplex(full)):
        # real polynomial: drop rounding-level imaginary parts of real roots
        roots = [complex(r.real, 0.0) if abs(r.imag) <= 1e-13 * abs(r) else r for r in roots]
    order = np.lexsort((np.imag(roots), np.real(roots)))
    roots = [roots[i] for i in order]
    mults = [mults[i] for i in order]
    if not allow_zero and any(abs(r) < cluster_radius for r in roots):
        raise ZeroRootError("a root lies within cluster_radius of zero")
    spec = RootSpectrum(tuple(roots), tuple(mults), allow_zero=allow_zero)
    try:
        spec.check(p)
    except RootFindingError as exc:
        if converged:
            raise
        # stalled iteration means a multiple root whose copies were not merged
        raise RootFindingError(
            f"{exc}; a root of multiplicity m is only resolved to about eps^(1/m), "
            f"try a larger cluster_radius than {cluster_radius:g}"
        ) from None
    return spec


def residue_weights(spec: RootSpectrum) -> np.ndarray:
    """w[h, k-1] = eta_h^(k-1) / prod_{j != h}(eta_h - eta_j) for k = 1..N.

    Row h is root ``spec.roots[h]``; column k-1 is the power index k.
    """
    if not spec.simple:
        raise MultiplicityError("residue weights need simple roots")
    eta = np.array(spec.roots)
    n = len(eta)
    diff = eta[:, None] - eta[None, :]
    np.fill_diagonal(diff, 1.0)
    denom = np.prod(diff, axis=1)
    powers = eta[:, None] ** np.arange(n)[None, :]
    return powers / denom[:, None]
