# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels. Same names, signatures and algorithms as ``_pure``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport log, log1p, fmin, fabs, sqrt, copysign, INFINITY, isfinite

cnp.import_array()

cdef double EPS = np.finfo(float).eps


cdef inline double _psi(double t) nogil:
    cdef double u = fabs(t)
    if u > 1.0:
        u = 1.0
    u = -log1p(-u + 0.5 * u * u)
    return u if t >= 0.0 else -u


cdef inline double _psi_prime(double t) nogil:
    cdef double u = fabs(t)
    if u >= 1.0:
        return 0.0
    return (1.0 - u) / (1.0 - u + 0.5 * u * u)


# With u = min(|t|, 1) each term is -+log(f), f = 1 - u + u^2/2 in [1/2, 1]
# (f = 1/2 is the saturated value log 2). A block of _BLOCK factors stays above
# 2^-_BLOCK, so one log per sign serves the whole block, and the loop is free of
# data-dependent branches.
cdef Py_ssize_t _BLOCK = 256


cdef double _psi_block(const double* a, Py_ssize_t n, double beta, double lam,
                       double* slope) noexcept nogil:
    cdef Py_ssize_t i
    cdef double t, u, f, pos = 1.0, neg = 1.0, dacc = 0.0
    for i in range(n):
        t = beta * a[i] - lam
        u = fmin(fabs(t), 1.0)
        f = 1.0 - u + 0.5 * u * u
        pos *= f if t >= 0.0 else 1.0
        neg *= 1.0 if t >= 0.0 else f
        dacc += a[i] * (1.0 - u) / f
    if slope != NULL:
        slope[0] += dacc
    return log(neg) - log(pos)


cdef double _psi_sum(const double[::1] a, double beta, double lam) nogil:
    cdef Py_ssize_t start = 0, n = a.shape[0]
    cdef double acc = 0.0
    while start < n:
        acc += _psi_block(&a[start], min(_BLOCK, n - start), beta, lam, NULL)
        start += _BLOCK
    return acc


cdef void _psi_sum_slope(const double[::1] a, double beta, double lam,
                         double* s, double* ds) nogil:
    cdef Py_ssize_t start = 0, n = a.shape[0]
    cdef double acc = 0.0
    ds[0] = 0.0
    while start < n:
        acc += _psi_block(&a[start], min(_BLOCK, n - start), beta, lam, ds)
        start += _BLOCK
    s[0] = acc


def psi(t):
    t_arr = np.ascontiguousarray(t, dtype=float)
    out = np.empty_like(t_arr)
    cdef double[::1] src = t_arr.reshape(-1)
    cdef double[::1] dst = out.reshape(-1)
    cdef Py_ssize_t i
    with nogil:
        for i in range(src.shape[0]):
            dst[i] = _psi(src[i])
    return out


def psi_prime(t):
    t_arr = np.ascontiguousarray(t, dtype=float)
    out = np.empty_like(t_arr)
    cdef double[::1] src = t_arr.reshape(-1)
    cdef double[::1] dst = out.reshape(-1)
    cdef Py_ssize_t i
    with nogil:
        for i in range(src.shape[0]):
            dst[i] = _psi_prime(src[i])
    return out


def psi_sum(a, double beta, double lam):
    cdef const double[::1] av = np.ascontiguousarray(a, dtype=float)
    cdef double s
    with nogil:
        s = _psi_sum(av, beta, lam)
    return s


def psi_sum_slope(a, double beta, double lam):
    cdef const double[::1] av = np.ascontiguousarray(a, dtype=float)
    cdef double s, ds
    with nogil:
        _psi_sum_slope(av, beta, lam, &s, &ds)
    return s, ds


def solve_beta(a, double lam, double lo, double hi, double tol, int max_iter):
    cdef const double[::1] av = np.ascontiguousarray(a, dtype=float)
    cdef Py_ssize_t n = av.shape[0], i
    cdef double target = n * tol
    cdef double s_lo, s_hi, s, ds, beta, nb, mean = 0.0
    cdef int expansions = 0, it = 0
    with nogil:
        s_lo = _psi_sum(av, lo, lam)
    if fabs(s_lo) <= target:
        return lo, s_lo, 0
    with nogil:
        s_hi = _psi_sum(av, hi, lam)
        while s_hi < 0.0 and expansions <= 2000:
            lo = hi
            s_lo = s_hi
            hi *= 2.0
            s_hi = _psi_sum(av, hi, lam)
            expansions += 1
    if s_hi < 0.0:
        raise ArithmeticError("bracket expansion failed")
    if fabs(s_hi) <= target:
        return hi, s_hi, 0

    for i in range(n):
        mean += av[i]
    mean /= n
    beta = lam / mean if mean > 0.0 else 0.5 * (lo + hi)
    if not (lo < beta < hi):
        beta = 0.5 * (lo + hi)
    s = s_lo
    with nogil:
        for it in range(1, max_iter + 1):
            _psi_sum_slope(av, beta, lam, &s, &ds)
            if fabs(s) <= target:
                break
            if s < 0.0:
                lo = beta
            else:
                hi = beta
            if hi - lo <= 4.0 * EPS * hi or it == max_iter:
                break
            nb = beta - s / ds if ds > 0.0 else lo
            if not (lo < nb < hi):
                nb = sqrt(lo) * sqrt(hi) if hi > 4.0 * lo else 0.5 * (lo + hi)
            beta = nb
    return beta, s, it


def jacobi_eigh(m, double tol, int max_sweeps):
    a_arr = np.array(m, dtype=float, order="C", copy=True)
    cdef double[:, ::1] a = a_arr
    cdef Py_ssize_t d = a.shape[0], p, q, k
    v_arr = np.eye(d)
    cdef double[:, ::1] v = v_arr
    cdef double scale = 0.0, off, diag, apq, theta, t, c, s, x, y
    cdef int sweeps = 0
    with nogil:
        for p in range(d):
            for q in range(d):
                scale += a[p, q] * a[p, q]
        scale = sqrt(scale)
        while True:
            off = 0.0
            for p in range(d):
                for q in range(d):
                    if p != q:
                        off += a[p, q] * a[p, q]
            off = sqrt(off)
            if off <= tol * scale or sweeps == max_sweeps:
                break
            for p in range(d - 1):
                for q in range(p + 1, d):
                    apq = a[p, q]
                    if fabs(apq) <= 1e-18 * (fabs(a[p, p]) + fabs(a[q, q])):
                        a[p, q] = 0.0
                        a[q, p] = 0.0
                        continue
                    theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                    if fabs(theta) > 1e150:
                        t = 0.5 / theta
                    else:
                        t = copysign(1.0, theta) / (fabs(theta) + sqrt(theta * theta + 1.0))
                    c = 1.0 / sqrt(t * t + 1.0)
                    s = t * c
                    for k in range(d):
                        x = a[k, p]
                        y = a[k, q]
                        a[k, p] = c * x - s * y
                        a[k, q] = s * x + c * y
                    for k in range(d):
                        x = a[p, k]
                        y = a[q, k]
                        a[p, k] = c * x - s * y
                        a[q, k] = s * x + c * y
                    a[p, q] = 0.0
                    a[q, p] = 0.0
                    for k in range(d):
                        x = v[k, p]
                        y = v[k, q]
                        v[k, p] = c * x - s * y
                        v[k, q] = s * x + c * y
            sweeps += 1
    return np.diag(a_arr).copy(), v_arr, sweeps


cdef inline double _quad(const double[:, ::1] th, Py_ssize_t j, double[:, ::1] q) nogil:
    cdef Py_ssize_t r, c, d = q.shape[0]
    cdef double acc = 0.0, row
    for r in range(d):
        row = 0.0
        for c in range(d):
            row += q[r, c] * th[j, c]
        acc += th[j, r] * row
    return acc


cdef inline void _add_outer(const double[:, ::1] th, Py_ssize_t j, double w,
                            double[:, ::1] q) nogil:
    cdef Py_ssize_t r, c, d = q.shape[0]
    for r in range(d):
        for c in range(d):
            q[r, c] += w * th[j, r] * th[j, c]


def dykstra(thetas, lower, upper, double tol, int max_iter):
    th_arr = np.ascontiguousarray(thetas, dtype=float)
    cdef const double[:, ::1] th = th_arr
    cdef const double[::1] lo = np.ascontiguousarray(lower, dtype=float)
    cdef const double[::1] hi = np.ascontiguousarray(upper, dtype=float)
    cdef Py_ssize_t m = th.shape[0], d = th.shape[1], j, r, c
    q_arr = np.zeros((d, d))
    old_arr = np.zeros((d, d))
    best_q = np.zeros((d, d))
    xp_arr = np.zeros(m)
    xm_arr = np.zeros(m)
    best_xp = np.zeros(m)
    best_xm = np.zeros(m)
    n2_arr = np.sum(th_arr * th_arr, axis=1) ** 2
    cdef double[:, ::1] q = q_arr
    cdef double[:, ::1] old = old_arr
    cdef double[::1] xp = xp_arr
    cdef double[::1] xm = xm_arr
    cdef const double[::1] n2 = n2_arr
    cdef double[:, ::1] bq = best_q
    cdef double[::1] bxp = best_xp
    cdef double[::1] bxm = best_xm
    cdef double s, t, u, move, viol, best_viol = INFINITY, diff, gap, qq
    cdef int sweeps = 0
    cdef bint converged = False
    with nogil:
        while sweeps < max_iter:
            sweeps += 1
            old[:, :] = q
            for j in range(m):
                if n2[j] == 0.0:
                    continue
                if isfinite(lo[j]):
                    s = _quad(th, j, q)
                    t = (lo[j] - (s - xp[j] * n2[j])) / n2[j]
                    if t < 0.0:
                        t = 0.0
                    _add_outer(th, j, t - xp[j], q)
                    xp[j] = t
                if isfinite(hi[j]):
                    s = _quad(th, j, q)
                    u = ((s + xm[j] * n2[j]) - hi[j]) / n2[j]
                    if u < 0.0:
                        u = 0.0
                    _add_outer(th, j, xm[j] - u, q)
                    xm[j] = u
            move = 0.0
            for r in range(d):
                for c in range(d):
                    diff = q[r, c] - old[r, c]
                    move += diff * diff
            move = sqrt(move)
            viol = 0.0
            gap = 0.0
            for j in range(m):
                s = _quad(th, j, q)
                if lo[j] - s > viol:
                    viol = lo[j] - s
                if s - hi[j] > viol:
                    viol = s - hi[j]
                if xp[j] > 0.0:
                    gap += xp[j] * fabs(s - lo[j])
                if xm[j] > 0.0:
                    gap += xm[j] * fabs(hi[j] - s)
            qq = 0.0
            for r in range(d):
                for c in range(d):
                    qq += q[r, c] * q[r, c]
            if viol <= best_viol:
                best_viol = viol
                bq[:, :] = q
                bxp[:] = xp
                bxm[:] = xm
            if viol <= tol and move <= tol and gap <= tol * (1.0 + qq):
                converged = True
                break
    if converged:
        return q_arr, xp_arr, xm_arr, sweeps, True, viol
    return best_q, best_xp, best_xm, sweeps, False, best_viol
