# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled recurrence kernels.

Same signatures and conventions as ``_kernels_py``.  The per-step products
(10 hidden units, batches of 32) are far too small for BLAS dispatch to
pay off, so they are written as axpy loops over stack buffers, which gcc
vectorises.  Hidden width is capped at ``MAX_HIDDEN``.
"""

import numpy as np
from libc.math cimport copysign, exp, fabs

DEF _MAXH = 128
MAX_HIDDEN = _MAXH


cdef inline double _sig(double z) nogil:
    return 1.0 / (1.0 + exp(-z))


cdef inline double _tanh(double x) nogil:
    # built on exp, several times cheaper than libm tanh; absolute error ~1e-16
    cdef double e = exp(-2.0 * fabs(x))
    return copysign((1.0 - e) / (1.0 + e), x)


cdef int _check_width(Py_ssize_t H) except -1:
    if H > _MAXH:
        raise ValueError(f"hidden width {H} exceeds the compiled kernel limit {_MAXH}")
    return 0


def lstm_forward(const double[:, :, ::1] xu, const double[:, ::1] W, bint cell_sigmoid=False):
    cdef Py_ssize_t B = xu.shape[0], S = xu.shape[1], H = W.shape[0]
    cdef Py_ssize_t G = 4 * H
    _check_width(H)
    hs_a = np.zeros((B, S, H))
    cs_a = np.zeros((B, S, H))
    gates_a = np.zeros((B, S, G))
    cdef double[:, :, ::1] hs = hs_a
    cdef double[:, :, ::1] cs = cs_a
    cdef double[:, :, ::1] gates = gates_a
    cdef double z[4 * _MAXH]
    cdef double h[_MAXH]
    cdef double c[_MAXH]
    cdef const double* wrow
    cdef Py_ssize_t n, t, j, k
    cdef double hv, cv, ig, fg, og, gg
    with nogil:
        for n in range(B):
            for j in range(H):
                h[j] = 0.0
                c[j] = 0.0
            for t in range(S):
                for j in range(G):
                    z[j] = xu[n, t, j]
                for k in range(H):
                    hv = h[k]
                    wrow = &W[k, 0]
                    for j in range(G):
                        z[j] += hv * wrow[j]
                for j in range(H):
                    ig = _sig(z[j])
                    fg = _sig(z[H + j])
                    og = _sig(z[2 * H + j])
                    gg = _tanh(z[3 * H + j])
                    gates[n, t, j] = ig
                    gates[n, t, H + j] = fg
                    gates[n, t, 2 * H + j] = og
                    gates[n, t, 3 * H + j] = gg
                    cv = fg * c[j] + ig * gg
                    if cell_sigmoid:
                        cv = _sig(cv)
                    c[j] = cv
                    cs[n, t, j] = cv
                    h[j] = _tanh(cv) * og
                    hs[n, t, j] = h[j]
    return hs_a, cs_a, gates_a


def lstm_backward(const double[:, ::1] W, const double[:, :, ::1] cs, const double[:, :, ::1] gates,
                  const double[:, :, ::1] dhs, bint cell_sigmoid=False):
    cdef Py_ssize_t B = cs.shape[0], S = cs.shape[1], H = W.shape[0]
    cdef Py_ssize_t G = 4 * H
    _check_width(H)
    WT_a = np.ascontiguousarray(np.asarray(W).T)
    cdef const double[:, ::1] WT = WT_a
    dz_a = np.empty((B, S, G))
    cdef double[:, :, ::1] dz = dz_a
    cdef double dzl[4 * _MAXH]
    cdef double dh_next[_MAXH]
    cdef double dc_next[_MAXH]
    cdef const double* wrow
    cdef Py_ssize_t n, t, j, k
    cdef double c, tc, dh, dc, ig, fg, og, gg, cprev, d
    with nogil:
        for n in range(B):
            for j in range(H):
                dh_next[j] = 0.0
                dc_next[j] = 0.0
            for t in range(S - 1, -1, -1):
                for j in range(H):
                    ig = gates[n, t, j]
                    fg = gates[n, t, H + j]
                    og = gates[n, t, 2 * H + j]
                    gg = gates[n, t, 3 * H + j]
                    c = cs[n, t, j]
                    tc = _tanh(c)
                    dh = dhs[n, t, j] + dh_next[j]
                    dc = dh * og * (1.0 - tc * tc) + dc_next[j]
                    if cell_sigmoid:
                        dc = dc * c * (1.0 - c)
                    cprev = cs[n, t - 1, j] if t > 0 else 0.0
                    dzl[j] = dc * gg * ig * (1.0 - ig)
                    dzl[H + j] = dc * cprev * fg * (1.0 - fg)
                    dzl[2 * H + j] = dh * tc * og * (1.0 - og)
                    dzl[3 * H + j] = dc * ig * (1.0 - gg * gg)
                    dc_next[j] = dc * fg
                for j in range(H):
                    dh_next[j] = 0.0
                for j in range(G):
                    d = dzl[j]
                    dz[n, t, j] = d
                    wrow = &WT[j, 0]
                    for k in range(H):
                        dh_next[k] += d * wrow[k]
    return dz_a


def elman_forward(const double[:, :, ::1] xw, const double[:, ::1] U):
    cdef Py_ssize_t B = xw.shape[0], S = xw.shape[1], H = U.shape[0]
    _check_width(H)
    hs_a = np.zeros((B, S, H))
    cdef double[:, :, ::1] hs = hs_a
    cdef double a[_MAXH]
    cdef double h[_MAXH]
    cdef const double* urow
    cdef Py_ssize_t n, t, j, k
    cdef double v
    with nogil:
        for n in range(B):
            for j in range(H):
                h[j] = 0.0
            for t in range(S):
                for j in range(H):
                    a[j] = xw[n, t, j]
                for k in range(H):
                    v = h[k]
                    urow = &U[k, 0]
                    for j in range(H):
                        a[j] += v * urow[j]
                for j in range(H):
                    h[j] = _tanh(a[j])
                    hs[n, t, j] = h[j]
    return hs_a


def elman_backward(const double[:, ::1] U, const double[:, :, ::1] hs, const double[:, :, ::1] dhs):
    cdef Py_ssize_t B = hs.shape[0], S = hs.shape[1], H = U.shape[0]
    _check_width(H)
    UT_a = np.ascontiguousarray(np.asarray(U).T)
    cdef const double[:, ::1] UT = UT_a
    da_a = np.empty((B, S, H))
    cdef double[:, :, ::1] da = da_a
    cdef double dal[_MAXH]
    cdef double dh_next[_MAXH]
    cdef const double* urow
    cdef Py_ssize_t n, t, j, k
    cdef double h, d
    with nogil:
        for n in range(B):
            for j in range(H):
                dh_next[j] = 0.0
            for t in range(S - 1, -1, -1):
                for j in range(H):
                    h = hs[n, t, j]
                    dal[j] = (dhs[n, t, j] + dh_next[j]) * (1.0 - h * h)
                    da[n, t, j] = dal[j]
                    dh_next[j] = 0.0
                for j in range(H):
                    d = dal[j]
                    urow = &UT[j, 0]
                    for k in range(H):
                        dh_next[k] += d * urow[k]
    return da_a
