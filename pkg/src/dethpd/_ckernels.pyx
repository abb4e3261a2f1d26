# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled tree-building and query kernels.

Mirrors ``_pykernels`` operation for operation; results are bit-identical.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport floor, ceil, fabs
from libc.stdint cimport uint64_t, int64_t

cnp.import_array()

BACKEND = "cython"

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL


cdef inline uint64_t _mix(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


def splitmix64(state):
    cdef uint64_t s = <uint64_t>state
    s += GOLDEN
    return s, _mix(s)


def child_key(key, side):
    cdef uint64_t k = <uint64_t>key
    cdef uint64_t s = k ^ (<uint64_t>(side + 1) * 0xD1B54A32D192ED03ULL)
    s += GOLDEN
    return _mix(s)


cdef void _bins(const double[:, ::1] X, const int64_t[::1] idx,
                const double[::1] lower, const double[::1] upper, int m,
                int[:, ::1] ob, int[:, ::1] cb) noexcept nogil:
    cdef Py_ssize_t n = idx.shape[0]
    cdef Py_ssize_t d = X.shape[1]
    cdef Py_ssize_t j, i
    cdef double t, f
    for j in range(n):
        for i in range(d):
            t = (X[idx[j], i] - lower[i]) / (upper[i] - lower[i]) * m
            f = floor(t) + 1.0
            if f < 1.0:
                f = 1.0
            elif f > m + 1.0:
                f = m + 1.0
            ob[j, i] = <int>f
            f = ceil(t)
            if f < 0.0:
                f = 0.0
            elif f > <double>m:
                f = <double>m
            cb[j, i] = <int>f


cdef double _exhaustive(int[:, ::1] ob, int[:, ::1] cb, Py_ssize_t n, int m,
                        int64_t[::1] hopen, int64_t[::1] hclosed) noexcept nogil:
    cdef Py_ssize_t d = ob.shape[1]
    cdef Py_ssize_t size = hopen.shape[0]
    cdef Py_ssize_t j, i, f, stride, flat, rem, coord
    cdef bint keep
    cdef double best = 0.0, vol, a, b
    cdef Py_ssize_t side = m + 1
    for f in range(size):
        hopen[f] = 0
        hclosed[f] = 0
    for j in range(n):
        keep = True
        flat = 0
        for i in range(d):
            if ob[j, i] > m:
                keep = False
                break
            flat = flat * side + ob[j, i]
        if keep:
            hopen[flat] += 1
        flat = 0
        for i in range(d):
            flat = flat * side + cb[j, i]
        hclosed[flat] += 1
    # prefix sums along every axis; axis i has stride side**(d-1-i)
    stride = 1
    for i in range(d):
        for f in range(size):
            if (f // stride) % side > 0:
                hopen[f] += hopen[f - stride]
                hclosed[f] += hclosed[f - stride]
        stride *= side
    for f in range(size):
        vol = 1.0
        rem = f
        stride = size // side
        for i in range(d):
            coord = rem // stride
            rem = rem - coord * stride
            stride = stride // side
            vol *= (<double>coord) / m
        a = fabs((<double>hopen[f]) / n - vol)
        b = fabs((<double>hclosed[f]) / n - vol)
        if b > a:
            a = b
        if a > best:
            best = a
    return best


cdef double _ascent(int[:, ::1] ob, int[:, ::1] cb, Py_ssize_t n, int m,
                    long budget, int starts, uint64_t key, double threshold,
                    long* evals_out, int[::1] viol_o, int[::1] viol_c,
                    int64_t[::1] co, int64_t[::1] cc, double[::1] val,
                    int64_t[::1] corner) noexcept nogil:
    cdef Py_ssize_t d = ob.shape[1]
    cdef Py_ssize_t j, i, k, t, t_star
    cdef long evals = 0
    cdef double best = 0.0, p, vol, a, b, v_star
    cdef uint64_t state = key
    cdef int s, lim
    cdef bint moved
    for s in range(starts):
        for i in range(d):
            if s == 0:
                corner[i] = m
            else:
                state += GOLDEN
                corner[i] = 1 + <int64_t>(_mix(state) % <uint64_t>m)
        for j in range(n):
            viol_o[j] = 0
            viol_c[j] = 0
            for k in range(d):
                if ob[j, k] > corner[k]:
                    viol_o[j] += 1
                if cb[j, k] > corner[k]:
                    viol_c[j] += 1
        while True:
            moved = False
            for i in range(d):
                if evals + m + 1 > budget:
                    evals_out[0] = evals
                    return best
                evals += m + 1
                p = 1.0
                for k in range(d):
                    if k != i:
                        p = p * ((<double>corner[k]) / m)
                for t in range(m + 2):
                    co[t] = 0
                    cc[t] = 0
                lim = <int>corner[i]
                for j in range(n):
                    if viol_o[j] - (ob[j, i] > lim) == 0:
                        co[ob[j, i]] += 1
                    if viol_c[j] - (cb[j, i] > lim) == 0:
                        cc[cb[j, i]] += 1
                for t in range(1, m + 1):
                    co[t] += co[t - 1]
                    cc[t] += cc[t - 1]
                t_star = 0
                v_star = -1.0
                for t in range(m + 1):
                    vol = p * ((<double>t) / m)
                    a = fabs((<double>co[t]) / n - vol)
                    b = fabs((<double>cc[t]) / n - vol)
                    if b > a:
                        a = b
                    val[t] = a
                    if a > v_star:
                        v_star = a
                        t_star = t
                if v_star > best:
                    best = v_star
                if best > threshold:
                    evals_out[0] = evals
                    return best
                if v_star > val[lim]:
                    for j in range(n):
                        viol_o[j] += (ob[j, i] > t_star) - (ob[j, i] > lim)
                        viol_c[j] += (cb[j, i] > t_star) - (cb[j, i] > lim)
                    corner[i] = t_star
                    moved = True
            if not moved:
                break
    evals_out[0] = evals
    return best


def scan_leaf(const double[:, ::1] X, idx, const double[::1] lower,
              const double[::1] upper, int m, long budget, int starts, key,
              double threshold):
    """Star discrepancy estimate and max gap for the points ``X[idx]`` of one cell.

    Returns ``(dstar, evals, dim, bin, h_max)``.
    """
    cdef const int64_t[::1] ix = np.ascontiguousarray(idx, dtype=np.int64)
    cdef Py_ssize_t n = ix.shape[0]
    cdef Py_ssize_t d = X.shape[1]
    cdef int[:, ::1] ob = np.empty((n, d), dtype=np.intc)
    cdef int[:, ::1] cb = np.empty((n, d), dtype=np.intc)
    cdef int64_t[::1] cnt = np.empty(m + 2, dtype=np.int64)
    cdef Py_ssize_t i, j, l
    cdef double h, best_h = -1.0, dstar
    cdef int best_dim = 0, best_l = 1
    cdef long evals = 0
    cdef Py_ssize_t size
    cdef uint64_t ukey = <uint64_t>key
    with nogil:
        _bins(X, ix, lower, upper, m, ob, cb)
        for i in range(d):
            for l in range(m + 2):
                cnt[l] = 0
            for j in range(n):
                cnt[ob[j, i]] += 1
            for l in range(1, m + 2):
                cnt[l] += cnt[l - 1]
            for l in range(1, m):
                h = fabs((<double>cnt[l]) / n - (<double>l) / m)
                if h > best_h:
                    best_h = h
                    best_dim = <int>i
                    best_l = <int>l
    if (<double>m) ** d <= budget:
        size = (m + 1) ** d
        hopen = np.empty(size, dtype=np.int64)
        hclosed = np.empty(size, dtype=np.int64)
        dstar = _exhaustive(ob, cb, n, m, hopen, hclosed)
        evals = size
    else:
        viol_o = np.empty(n, dtype=np.intc)
        viol_c = np.empty(n, dtype=np.intc)
        co = np.empty(m + 2, dtype=np.int64)
        cc = np.empty(m + 2, dtype=np.int64)
        val = np.empty(m + 1, dtype=np.float64)
        corner = np.empty(d, dtype=np.int64)
        dstar = _ascent(ob, cb, n, m, budget, starts, ukey, threshold, &evals,
                        viol_o, viol_c, co, cc, val, corner)
    return dstar, evals, best_dim, best_l, best_h


def gap_table(const double[:, ::1] X, idx, const double[::1] lower,
              const double[::1] upper, int m):
    cdef const int64_t[::1] ix = np.ascontiguousarray(idx, dtype=np.int64)
    cdef Py_ssize_t n = ix.shape[0]
    cdef Py_ssize_t d = X.shape[1]
    cdef int[:, ::1] ob = np.empty((n, d), dtype=np.intc)
    cdef int[:, ::1] cb = np.empty((n, d), dtype=np.intc)
    cdef int64_t[::1] cnt = np.empty(m + 2, dtype=np.int64)
    out = np.empty((m - 1, d), dtype=np.float64)
    cdef double[:, ::1] table = out
    cdef Py_ssize_t i, j, l
    with nogil:
        _bins(X, ix, lower, upper, m, ob, cb)
        for i in range(d):
            for l in range(m + 2):
                cnt[l] = 0
            for j in range(n):
                cnt[ob[j, i]] += 1
            for l in range(1, m + 2):
                cnt[l] += cnt[l - 1]
            for l in range(1, m):
                table[l - 1, i] = fabs((<double>cnt[l]) / n - (<double>l) / m)
    return out


def split_points(const double[:, ::1] X, idx, const double[::1] lower,
                 const double[::1] upper, int m, int dim, int l):
    """Stable partition of ``idx`` into points left / right of grid line ``l``."""
    cdef const int64_t[::1] ix = np.ascontiguousarray(idx, dtype=np.int64)
    cdef Py_ssize_t n = ix.shape[0]
    left_arr = np.empty(n, dtype=np.int64)
    right_arr = np.empty(n, dtype=np.int64)
    cdef int64_t[::1] lv = left_arr
    cdef int64_t[::1] rv = right_arr
    cdef Py_ssize_t j, nl = 0, nr = 0
    cdef double t, f
    with nogil:
        for j in range(n):
            t = (X[ix[j], dim] - lower[dim]) / (upper[dim] - lower[dim]) * m
            f = floor(t) + 1.0
            if f < 1.0:
                f = 1.0
            elif f > m + 1.0:
                f = m + 1.0
            if f <= l:
                lv[nl] = ix[j]
                nl += 1
            else:
                rv[nr] = ix[j]
                nr += 1
    return left_arr[:nl], right_arr[:nr]


def descend(X, const int64_t[::1] feature, const double[::1] threshold,
            const int64_t[::1] left, const int64_t[::1] right,
            const int64_t[::1] leaf_index, const double[::1] rect_lower,
            const double[::1] rect_upper):
    """Leaf index for each row of ``X``; -1 for rows outside the closed root box."""
    cdef const double[:, ::1] P = np.ascontiguousarray(X, dtype=np.float64)
    cdef Py_ssize_t n = P.shape[0]
    cdef Py_ssize_t d = P.shape[1]
    out = np.full(n, -1, dtype=np.int64)
    cdef int64_t[::1] ov = out
    cdef Py_ssize_t j, i
    cdef int64_t node
    cdef bint inside
    cdef double x
    with nogil:
        for j in range(n):
            inside = True
            for i in range(d):
                x = P[j, i]
                if not (x >= rect_lower[i] and x <= rect_upper[i]):
                    inside = False
                    break
            if not inside:
                continue
            node = 0
            while feature[node] >= 0:
                if P[j, feature[node]] < threshold[node]:
                    node = left[node]
                else:
                    node = right[node]
            ov[j] = leaf_index[node]
    return out
