# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled implementations of the hot polyline kernels.

Mirrors ``_ref`` for the closed-form factor families ("dw", "product",
"blend").  The arbitrary-callable family is not compiled; the dispatcher in
``kernels.__init__`` keeps it on the numpy path.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, sqrt

cnp.import_array()

DEF MAX_DIM = 8

cdef double TINY = 1e-300

cdef int FAM_DW = 1
cdef int FAM_PRODUCT = 2
cdef int FAM_BLEND = 3


cdef inline double _step_down(double t) noexcept nogil:
    if t <= 0.0:
        return 1.0
    if t >= 1.0:
        return 0.0
    return 1.0 - t * t * t * (t * (6.0 * t - 15.0) + 10.0)


cdef inline double _step_down_deriv(double t) noexcept nogil:
    if t <= 0.0 or t >= 1.0:
        return 0.0
    return -30.0 * t * t * (t - 1.0) * (t - 1.0)


cdef class _Spec:
    cdef int family
    cdef int k
    cdef int m
    cdef double c
    cdef double r
    cdef double p0
    cdef double r0
    cdef double[:, ::1] wells
    cdef double[::1] alphas


cdef _Spec _parse(spec):
    cdef _Spec s = _Spec()
    kind = spec[0]
    if kind == "dw":
        s.family = FAM_DW
        s.c = float(spec[1])
        s.m = 1
        s.k = 2
    elif kind == "product":
        s.family = FAM_PRODUCT
        s.wells = np.ascontiguousarray(
            np.vstack([np.atleast_1d(spec[1]), np.atleast_1d(spec[2])]), dtype=np.float64)
        s.k = 2
        s.m = s.wells.shape[1]
    elif kind == "blend":
        s.family = FAM_BLEND
        s.wells = np.ascontiguousarray(spec[1], dtype=np.float64)
        s.alphas = np.ascontiguousarray(spec[2], dtype=np.float64)
        s.r = float(spec[3])
        s.p0 = float(spec[4])
        s.r0 = float(spec[5])
        s.k = s.wells.shape[0]
        s.m = s.wells.shape[1]
    else:
        raise ValueError(f"family {kind!r} is not compiled")
    if s.m > MAX_DIM:
        raise ValueError("compiled kernels support at most 8 state dimensions")
    return s


cdef double _value(_Spec s, const double* z) noexcept nogil:
    cdef double u, da, db, acc, g, w, btot, d, beta, t
    cdef int i, j
    if s.family == FAM_DW:
        u = z[0]
        return 2.0 * sqrt(s.c) * fabs(1.0 - u * u)
    if s.family == FAM_PRODUCT:
        da = 0.0
        db = 0.0
        for j in range(s.m):
            acc = z[j] - s.wells[0, j]
            da += acc * acc
            acc = z[j] - s.wells[1, j]
            db += acc * acc
        return 2.0 * sqrt(da) * sqrt(db)
    # blend
    acc = 0.0
    for j in range(s.m):
        acc += z[j] * z[j]
    g = s.p0 * sqrt(1.0 + acc / (s.r0 * s.r0))
    w = 0.0
    btot = 0.0
    for i in range(s.k):
        d = 0.0
        for j in range(s.m):
            acc = z[j] - s.wells[i, j]
            d += acc * acc
        d = sqrt(d)
        t = (d - s.r) / s.r
        beta = _step_down(t)
        w += beta * s.alphas[i] * d * d
        btot += beta
    w += (1.0 - btot) * g
    if w < 0.0:
        w = 0.0
    return 2.0 * sqrt(w)


cdef void _grad(_Spec s, const double* z, double* out) noexcept nogil:
    cdef double u, da, db, acc, sroot, g, w, btot, d, beta, dbeta, t, root, coef
    cdef double dz[MAX_DIM]
    cdef double gw[MAX_DIM]
    cdef int i, j
    if s.family == FAM_DW:
        u = z[0]
        if 1.0 - u * u > 0.0:
            out[0] = -4.0 * sqrt(s.c) * u
        elif 1.0 - u * u < 0.0:
            out[0] = 4.0 * sqrt(s.c) * u
        else:
            out[0] = 0.0
        return
    if s.family == FAM_PRODUCT:
        da = 0.0
        db = 0.0
        for j in range(s.m):
            acc = z[j] - s.wells[0, j]
            da += acc * acc
            acc = z[j] - s.wells[1, j]
            db += acc * acc
        da = sqrt(da)
        db = sqrt(db)
        for j in range(s.m):
            out[j] = 2.0 * (db * (z[j] - s.wells[0, j]) / max(da, TINY)
                            + da * (z[j] - s.wells[1, j]) / max(db, TINY))
        return
    # blend: gradient of W, then F = 2 sqrt(W) so grad F = grad W / sqrt(W)
    acc = 0.0
    for j in range(s.m):
        acc += z[j] * z[j]
    sroot = sqrt(1.0 + acc / (s.r0 * s.r0))
    g = s.p0 * sroot
    w = 0.0
    btot = 0.0
    for j in range(s.m):
        gw[j] = 0.0
    for i in range(s.k):
        d = 0.0
        for j in range(s.m):
            dz[j] = z[j] - s.wells[i, j]
            d += dz[j] * dz[j]
        d = sqrt(d)
        t = (d - s.r) / s.r
        beta = _step_down(t)
        dbeta = _step_down_deriv(t) / s.r
        w += beta * s.alphas[i] * d * d
        btot += beta
        coef = dbeta * (s.alphas[i] * d * d - g) / max(d, TINY)
        for j in range(s.m):
            gw[j] += coef * dz[j] + 2.0 * s.alphas[i] * beta * dz[j]
    w += (1.0 - btot) * g
    coef = (1.0 - btot) * s.p0 / (s.r0 * s.r0 * sroot)
    for j in range(s.m):
        gw[j] += coef * z[j]
    if w < 0.0:
        w = 0.0
    root = sqrt(w)
    if root > 1e-14:
        for j in range(s.m):
            out[j] = gw[j] / root
    else:
        for j in range(s.m):
            out[j] = 0.0


def factor_values(spec, z):
    cdef _Spec s = _parse(spec)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] zz = np.ascontiguousarray(
        np.atleast_2d(np.asarray(z, dtype=np.float64)))
    cdef Py_ssize_t n = zz.shape[0], i
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n)
    for i in range(n):
        out[i] = _value(s, &zz[i, 0])
    return out


def factor_grads(spec, z):
    cdef _Spec s = _parse(spec)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] zz = np.ascontiguousarray(
        np.atleast_2d(np.asarray(z, dtype=np.float64)))
    cdef Py_ssize_t n = zz.shape[0], i
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((n, s.m))
    for i in range(n):
        _grad(s, &zz[i, 0], &out[i, 0])
    return out


def polyline_cost(spec, nodes):
    cdef _Spec s = _parse(spec)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] nd = np.ascontiguousarray(
        np.asarray(nodes, dtype=np.float64))
    cdef Py_ssize_t nseg = nd.shape[0] - 1, m = nd.shape[1], i, j
    cdef double mid[MAX_DIM]
    cdef double acc, L, cost = 0.0
    for i in range(nseg):
        L = 0.0
        for j in range(m):
            mid[j] = 0.5 * (nd[i, j] + nd[i + 1, j])
            acc = nd[i + 1, j] - nd[i, j]
            L += acc * acc
        cost += _value(s, mid) * sqrt(L)
    return cost


def polyline_cost_grad(spec, nodes):
    cdef _Spec s = _parse(spec)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] nd = np.ascontiguousarray(
        np.asarray(nodes, dtype=np.float64))
    cdef Py_ssize_t nseg = nd.shape[0] - 1, m = nd.shape[1], i, j
    cdef cnp.ndarray[cnp.float64_t, ndim=1] fm = np.empty(nseg)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] gm = np.empty((nseg, m))
    cdef cnp.ndarray[cnp.float64_t, ndim=1] lengths = np.empty(nseg)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] unit = np.empty((nseg, m))
    cdef cnp.ndarray[cnp.float64_t, ndim=2] grad = np.zeros((max(nseg - 1, 0), m))
    cdef double mid[MAX_DIM]
    cdef double acc, L, cost = 0.0
    for i in range(nseg):
        L = 0.0
        for j in range(m):
            mid[j] = 0.5 * (nd[i, j] + nd[i + 1, j])
            acc = nd[i + 1, j] - nd[i, j]
            L += acc * acc
        L = sqrt(L)
        lengths[i] = L
        fm[i] = _value(s, mid)
        _grad(s, mid, &gm[i, 0])
        if L > 0.0:
            for j in range(m):
                unit[i, j] = (nd[i + 1, j] - nd[i, j]) / L
        else:
            for j in range(m):
                unit[i, j] = 0.0
        cost += fm[i] * L
    for i in range(nseg - 1):
        for j in range(m):
            grad[i, j] = (0.5 * (gm[i, j] * lengths[i] + gm[i + 1, j] * lengths[i + 1])
                          + fm[i] * unit[i, j] - fm[i + 1] * unit[i + 1, j])
    return cost, grad


def redistribute(nodes, n_out=None):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] nd = np.ascontiguousarray(
        np.asarray(nodes, dtype=np.float64))
    cdef Py_ssize_t n = nd.shape[0], m = nd.shape[1]
    cdef Py_ssize_t nout = n if n_out is None else int(n_out)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] s = np.empty(n)
    cdef Py_ssize_t i, j, seg
    cdef double acc, L, total, target, w
    s[0] = 0.0
    for i in range(1, n):
        L = 0.0
        for j in range(m):
            acc = nd[i, j] - nd[i - 1, j]
            L += acc * acc
        s[i] = s[i - 1] + sqrt(L)
    total = s[n - 1]
    if total <= 0.0:
        return np.repeat(nd[:1], nout, axis=0)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((nout, m))
    seg = 0
    for i in range(nout):
        target = total * i / (nout - 1)
        while seg < n - 2 and s[seg + 1] < target:
            seg += 1
        if s[seg + 1] > s[seg]:
            w = (target - s[seg]) / (s[seg + 1] - s[seg])
        else:
            w = 0.0
        if w < 0.0:
            w = 0.0
        if w > 1.0:
            w = 1.0
        for j in range(m):
            out[i, j] = nd[seg, j] + w * (nd[seg + 1, j] - nd[seg, j])
    for j in range(m):
        out[0, j] = nd[0, j]
        out[nout - 1, j] = nd[n - 1, j]
    return out
