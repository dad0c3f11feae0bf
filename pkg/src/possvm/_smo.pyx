# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled SMO core.  Mirrors ``_smo_py.solve`` for a dense Gram matrix."""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()

ctypedef unsigned long long u64


cdef inline u64 _next(u64* state) nogil:
    cdef u64 x = state[0]
    x ^= x << 13
    x ^= x >> 7
    x ^= x << 17
    state[0] = x
    return x


cdef inline double _fmin(double a, double b) nogil:
    return a if a < b else b


cdef inline double _fmax(double a, double b) nogil:
    return a if a > b else b


cdef inline bint _in_up(double a, double yy, double C) nogil:
    return (yy > 0 and a < C) or (yy < 0 and a > 0)


cdef inline bint _in_low(double a, double yy, double C) nogil:
    return (yy > 0 and a > 0) or (yy < 0 and a < C)


cdef double _select(double[::1] alpha, double[::1] F, double[::1] y, double C,
                    Py_ssize_t n, Py_ssize_t* bi, Py_ssize_t* bj) nogil:
    cdef Py_ssize_t t, i = -1, j = -1
    cdef double fi = 0.0, fj = 0.0
    for t in range(n):
        if _in_up(alpha[t], y[t], C) and (i < 0 or F[t] < fi):
            i = t
            fi = F[t]
        if _in_low(alpha[t], y[t], C) and (j < 0 or F[t] > fj):
            j = t
            fj = F[t]
    bi[0] = i
    bj[0] = j
    if i < 0 or j < 0:
        return 0.0
    return fj - fi


cdef bint _step(double[:, ::1] K, double[::1] y, double[::1] alpha, double[::1] F,
                double C, Py_ssize_t n, Py_ssize_t i, Py_ssize_t j) nogil:
    cdef double y1 = y[i], y2 = y[j], a1 = alpha[i], a2 = alpha[j]
    cdef double L, H, eta, direction, a2n, a1n, s1, s2, s, snap
    cdef bint hits_bound
    cdef Py_ssize_t t
    if y1 != y2:
        L = _fmax(0.0, a2 - a1)
        H = _fmin(C, C + a2 - a1)
    else:
        L = _fmax(0.0, a1 + a2 - C)
        H = _fmin(C, a1 + a2)
    if H <= L:
        return False
    eta = K[i, i] + K[j, j] - 2.0 * K[i, j]
    direction = y2 * (F[i] - F[j])
    if eta > 1e-12:
        a2n = _fmin(_fmax(a2 + direction / eta, L), H)
    else:
        a2n = H if direction > 0 else L
    snap = 1e-12 * _fmax(1.0, a1 + a2)
    if a2n < snap:
        a2n = 0.0
    elif a2n > C - snap:
        a2n = C
    s = y1 * y2
    a1n = a1 + s * (a2 - a2n)
    # keep y1*a1 + y2*a2 fixed when a rounding residue is pushed onto a bound
    if a1n < snap:
        a1n = 0.0
        a2n = a2 + s * (a1 - a1n)
    elif a1n > C - snap:
        a1n = C
        a2n = a2 + s * (a1 - a1n)
    hits_bound = ((a1n != a1 and (a1n == 0.0 or a1n == C))
                  or (a2n != a2 and (a2n == 0.0 or a2n == C)))
    if fabs(a2n - a2) <= 1e-14 * _fmax(1.0, a2 + a2n) and not hits_bound:
        return False
    s1 = (a1n - a1) * y1
    s2 = (a2n - a2) * y2
    for t in range(n):
        F[t] += s1 * K[i, t] + s2 * K[j, t]
    alpha[i] = a1n
    alpha[j] = a2n
    return True


cdef void _rebuild(double[:, ::1] K, double[::1] y, double[::1] alpha, double[::1] F,
                   Py_ssize_t n) nogil:
    cdef Py_ssize_t s, t
    cdef double c
    for t in range(n):
        F[t] = -y[t]
    for s in range(n):
        c = alpha[s] * y[s]
        if c != 0.0:
            for t in range(n):
                F[t] += c * K[s, t]


cdef bint _fallback(double[:, ::1] K, double[::1] y, double[::1] alpha, double[::1] F,
                    double C, double eps, Py_ssize_t n, Py_ssize_t i, Py_ssize_t j,
                    u64* state, Py_ssize_t[::1] buf) nogil:
    cdef Py_ssize_t m = 0, t, k, r, tmp, cand
    # sweep second multipliers in seeded random order
    for t in range(n):
        if _in_low(alpha[t], y[t], C):
            buf[m] = t
            m += 1
    for k in range(m - 1, 0, -1):
        r = <Py_ssize_t>(_next(state) % <u64>(k + 1))
        tmp = buf[k]; buf[k] = buf[r]; buf[r] = tmp
    for t in range(m):
        cand = buf[t]
        if F[cand] - F[i] > eps and _step(K, y, alpha, F, C, n, i, cand):
            return True
    m = 0
    for t in range(n):
        if _in_up(alpha[t], y[t], C):
            buf[m] = t
            m += 1
    for k in range(m - 1, 0, -1):
        r = <Py_ssize_t>(_next(state) % <u64>(k + 1))
        tmp = buf[k]; buf[k] = buf[r]; buf[r] = tmp
    for t in range(m):
        cand = buf[t]
        if F[j] - F[cand] > eps and _step(K, y, alpha, F, C, n, cand, j):
            return True
    return False


def solve(K, y, double C, double eps, long long max_iter, u64 state,
          long long rebuild_every, bint trace=False):
    """Dense-Gram SMO.  ``state`` is the initial xorshift state (see
    ``_smo_py.XorShift64``).  Returns ``(alpha, F, updates, gap, dual_trace)``."""
    cdef double[:, ::1] Kv = np.ascontiguousarray(K, dtype=np.float64)
    cdef double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef Py_ssize_t n = yv.shape[0]
    alpha_arr = np.zeros(n)
    F_arr = -np.asarray(yv).copy()
    cdef double[::1] alpha = alpha_arr
    cdef double[::1] F = F_arr
    cdef Py_ssize_t[::1] buf = np.empty(n, dtype=np.intp)
    cdef Py_ssize_t i = -1, j = -1, t
    cdef long long updates = 0
    cdef double gap = 0.0, asum, quad
    cdef bint ok, done_by_break = False
    dual = [0.0] if trace else None
    while updates < max_iter:
        gap = _select(alpha, F, yv, C, n, &i, &j)
        if i < 0 or j < 0 or gap <= eps:
            done_by_break = True
            break
        with nogil:
            ok = _step(Kv, yv, alpha, F, C, n, i, j)
            if not ok:
                ok = _fallback(Kv, yv, alpha, F, C, eps, n, i, j, &state, buf)
        if not ok:
            done_by_break = True
            break
        updates += 1
        if rebuild_every > 0 and updates % rebuild_every == 0:
            _rebuild(Kv, yv, alpha, F, n)
        if trace:
            asum = 0.0
            quad = 0.0
            for t in range(n):
                asum += alpha[t]
                quad += alpha[t] * yv[t] * (F[t] + yv[t])
            dual.append(asum - 0.5 * quad)
    if not done_by_break:
        gap = _select(alpha, F, yv, C, n, &i, &j)
    return alpha_arr, F_arr, int(updates), float(gap), dual
