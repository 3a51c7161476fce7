"""Pure numpy implementations of the hot kernels.

Same signatures and semantics as the compiled ``_kernels`` module; used when
the extension is not built or ``MLFRAC_BACKEND=python`` is set.
"""

from __future__ import annotations

import numpy as np

NAME = "python"


def series_sum(c, g, logb, w, kmin, abs_tol, rel_tol):
    """Sum ``c[k] * exp(k*log(w) - g[k])`` per element of ``w``.

    Summation for an element stops at the first ``k >= kmin`` where the
    geometric tail bound built from the majorant ``exp(logb[k] + k*log|w| -
    Re g[k])`` drops below ``max(abs_tol, rel_tol*|partial sum|)``.

    Returns
    -------
    out : complex ndarray
    errsum : float ndarray
        Sum of ``|term| * (1 + k*|log w| + |g[k]|)``; times eps this bounds
        the rounding error, including that of each exponent.
    nterms : int ndarray
    ok : bool ndarray
        False where the table ran out before the tail bound was met.
    """
    c = np.asarray(c, dtype=np.complex128)
    g = np.asarray(g, dtype=np.complex128)
    logb = np.asarray(logb, dtype=np.float64)
    w = np.asarray(w, dtype=np.complex128)
    K = c.shape[0]
    P = w.shape[0]
    out = np.zeros(P, dtype=np.complex128)
    absum = np.zeros(P, dtype=np.float64)
    nterms = np.zeros(P, dtype=np.int64)
    ok = np.zeros(P, dtype=bool)

    zero = w == 0
    if zero.any():
        v = c[0] * np.exp(-g[0])
        out[zero] = v
        absum[zero] = abs(v) * (1.0 + (abs(g[0]) if np.isfinite(g[0]) else 0.0))
        nterms[zero] = 1
        ok[zero] = True

    idx = np.flatnonzero(~zero)
    if idx.size == 0:
        return out, absum, nterms, ok
    lw = np.log(w[idx])
    la = lw.real
    s = np.zeros(idx.size, dtype=np.complex128)
    a = np.zeros(idx.size, dtype=np.float64)
    mlw = np.abs(lw)
    for k in range(K):
        term = c[k] * np.exp(k * lw - g[k])
        s += term
        gk = abs(g[k]) if np.isfinite(g[k]) else 0.0  # poles give zero terms
        a += np.abs(term) * (1.0 + k * mlw + gk)
        if k < kmin or k + 1 >= K:
            continue
        log_tk = logb[k] + k * la - g[k].real
        log_tn = logb[k + 1] + (k + 1) * la - g[k + 1].real
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            rho = np.exp(log_tn - log_tk)
            tail = np.exp(log_tn) / (1.0 - rho)
        tol = np.maximum(abs_tol, rel_tol * np.abs(s))
        done = np.isfinite(log_tk) & (rho < 1.0) & (tail <= tol)
        if done.any():
            fin = idx[done]
            out[fin] = s[done]
            absum[fin] = a[done]
            nterms[fin] = k + 1
            ok[fin] = True
            keep = ~done
            idx, lw, la, mlw, s, a = idx[keep], lw[keep], la[keep], mlw[keep], s[keep], a[keep]
            if idx.size == 0:
                break
    if idx.size:
        out[idx] = s
        absum[idx] = a
        nterms[idx] = K
    return out, absum, nterms, ok


def motion_positions(counts, offsets, times, switch_u, init_u, cum_init, cum_switch, vel, t):
    """End positions of piecewise-linear paths driven by a velocity chain.

    ``times[offsets[p]:offsets[p]+counts[p]]`` are the sorted switch epochs of
    path ``p``; ``switch_u`` holds one uniform per epoch and ``init_u`` one per
    path, mapped to states through the cumulative rows ``cum_init`` and
    ``cum_switch``.
    """
    counts = np.asarray(counts, dtype=np.int64)
    offsets = np.asarray(offsets, dtype=np.int64)
    times = np.asarray(times, dtype=np.float64)
    switch_u = np.asarray(switch_u, dtype=np.float64)
    init_u = np.asarray(init_u, dtype=np.float64)
    cum_init = np.asarray(cum_init, dtype=np.float64)
    cum_switch = np.asarray(cum_switch, dtype=np.float64)
    vel = np.asarray(vel, dtype=np.float64)

    P = counts.shape[0]
    nstates = cum_init.shape[0]
    state = np.minimum((init_u[:, None] >= cum_init[None, :]).sum(axis=1), nstates - 1)
    prev = np.zeros(P)
    pos = np.zeros((P, vel.shape[1]))
    top = int(counts.max()) if P else 0
    for r in range(top):
        live = np.flatnonzero(counts > r)
        e = offsets[live] + r
        te = times[e]
        st = state[live]
        pos[live] += (te - prev[live])[:, None] * vel[st]
        rows = cum_switch[st]
        nxt = (switch_u[e][:, None] >= rows).sum(axis=1)
        state[live] = np.minimum(nxt, nstates - 1)
        prev[live] = te
    pos += (t - prev)[:, None] * vel[state]
    return pos
