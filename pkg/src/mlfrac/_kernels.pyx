# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels; see ``_fallback`` for the reference semantics."""

import numpy as np
cimport numpy as cnp
from libc.math cimport atan2, cos, exp, fabs, hypot, isfinite, log, sin

cnp.import_array()

NAME = "cython"


cdef inline double complex _cexp(double complex z) noexcept nogil:
    cdef double m = exp(z.real)
    return m * cos(z.imag) + 1j * (m * sin(z.imag))


def series_sum(c, g, logb, w, Py_ssize_t kmin, double abs_tol, double rel_tol):
    cdef const double complex[::1] cv = np.ascontiguousarray(c, dtype=np.complex128)
    cdef const double complex[::1] gv = np.ascontiguousarray(g, dtype=np.complex128)
    cdef const double[::1] bv = np.ascontiguousarray(logb, dtype=np.float64)
    cdef const double complex[::1] wv = np.ascontiguousarray(w, dtype=np.complex128)
    cdef Py_ssize_t K = cv.shape[0]
    cdef Py_ssize_t P = wv.shape[0]

    out_a = np.zeros(P, dtype=np.complex128)
    absum_a = np.zeros(P, dtype=np.float64)
    nterms_a = np.zeros(P, dtype=np.int64)
    ok_a = np.zeros(P, dtype=np.uint8)
    cdef double complex[::1] out = out_a
    cdef double complex term
    cdef double[::1] absum = absum_a
    cdef long long[::1] nterms = nterms_a
    cdef unsigned char[::1] ok = ok_a

    # per-call tables shared by all points: c_k e^{-i Im g_k}, |c_k|,
    # the error weight 1 + |g_k| (0 at poles) and the majorant step
    # logb[k+1] - logb[k] - Re(g[k+1] - g[k])
    rot_a = np.empty(K, dtype=np.complex128)
    cabs_a = np.empty(K, dtype=np.float64)
    gw_a = np.empty(K, dtype=np.float64)
    step_a = np.full(K, np.inf)
    cdef double complex[::1] rot = rot_a
    cdef double[::1] cabs = cabs_a
    cdef double[::1] gw = gw_a
    cdef double[::1] step = step_a
    cdef Py_ssize_t p, k
    for k in range(K):
        if isfinite(gv[k].real):
            rot[k] = cv[k] * (cos(gv[k].imag) - 1j * sin(gv[k].imag))
            gw[k] = 1.0 + hypot(gv[k].real, gv[k].imag)
        else:
            rot[k] = 0.0
            gw[k] = 0.0
        cabs[k] = hypot(cv[k].real, cv[k].imag)
        if k + 1 < K:
            step[k] = bv[k + 1] - bv[k] - (gv[k + 1].real - gv[k].real)

    cdef double complex e1, ph, s
    cdef double la, th, mlw, a, m, log_tk, log_tn, lr, tail, tol
    cdef bint done

    with nogil:
        for p in range(P):
            if wv[p].real == 0.0 and wv[p].imag == 0.0:
                term = cv[0] * _cexp(-gv[0])
                out[p] = term
                absum[p] = 0.0
                if isfinite(gv[0].real):
                    absum[p] = hypot(term.real, term.imag) * gw[0]
                nterms[p] = 1
                ok[p] = 1
                continue
            la = log(hypot(wv[p].real, wv[p].imag))
            th = atan2(wv[p].imag, wv[p].real)
            mlw = hypot(la, th)
            e1 = cos(th) + 1j * sin(th)
            ph = 1.0
            s = 0.0
            a = 0.0
            done = False
            for k in range(K):
                if k:
                    ph = ph * e1
                if gw[k] != 0.0:
                    m = exp(k * la - gv[k].real)
                    s = s + m * (rot[k] * ph)
                    a += m * cabs[k] * (gw[k] + k * mlw)
                if k < kmin or k + 1 >= K:
                    continue
                log_tk = bv[k] + k * la - gv[k].real
                if not isfinite(log_tk):
                    continue
                lr = step[k] + la
                if lr < 0.0:
                    log_tn = log_tk + lr
                    tol = rel_tol * hypot(s.real, s.imag)
                    if tol < abs_tol:
                        tol = abs_tol
                    tail = exp(log_tn) / (1.0 - exp(lr))
                    if tail <= tol:
                        nterms[p] = k + 1
                        done = True
                        break
            out[p] = s
            absum[p] = a
            if done:
                ok[p] = 1
            else:
                nterms[p] = K
    return out_a, absum_a, nterms_a, ok_a.astype(bool)


def motion_positions(counts, offsets, times, switch_u, init_u, cum_init, cum_switch, vel, double t):
    cdef const long long[::1] cn = np.ascontiguousarray(counts, dtype=np.int64)
    cdef const long long[::1] off = np.ascontiguousarray(offsets, dtype=np.int64)
    cdef const double[::1] tm = np.ascontiguousarray(times, dtype=np.float64)
    cdef const double[::1] su = np.ascontiguousarray(switch_u, dtype=np.float64)
    cdef const double[::1] iu = np.ascontiguousarray(init_u, dtype=np.float64)
    cdef const double[::1] ci = np.ascontiguousarray(cum_init, dtype=np.float64)
    cdef const double[:, ::1] cs = np.ascontiguousarray(cum_switch, dtype=np.float64)
    cdef const double[:, ::1] v = np.ascontiguousarray(vel, dtype=np.float64)
    cdef Py_ssize_t P = cn.shape[0]
    cdef Py_ssize_t S = ci.shape[0]
    cdef Py_ssize_t d = v.shape[1]

    pos_a = np.zeros((P, d), dtype=np.float64)
    cdef double[:, ::1] pos = pos_a
    cdef Py_ssize_t p, r, e, i, st
    cdef double prev, te, u

    with nogil:
        for p in range(P):
            u = iu[p]
            st = 0
            while st < S - 1 and u >= ci[st]:
                st += 1
            prev = 0.0
            for r in range(cn[p]):
                e = off[p] + r
                te = tm[e]
                for i in range(d):
                    pos[p, i] += (te - prev) * v[st, i]
                u = su[e]
                i = 0
                while i < S - 1 and u >= cs[st, i]:
                    i += 1
                st = i
                prev = te
            for i in range(d):
                pos[p, i] += (t - prev) * v[st, i]
    return pos_a
