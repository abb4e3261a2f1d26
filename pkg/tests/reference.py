"""Slow, literal reference implementations used as test oracles.

Everything here counts points corner by corner with plain comparisons; no
histograms, prefix sums or ascent, so it shares no code with the kernels.
"""
import itertools
import math

import numpy as np


def lattice_coords(X, lo, hi, m):
    return (X - lo) / (hi - lo) * m


def lattice_dstar(T, m):
    """Max over all grid corners of |share in box - volume|, open and closed boxes."""
    n, d = T.shape
    best = 0.0
    for corner in itertools.product(range(m + 1), repeat=d):
        a = np.array(corner, dtype=np.float64)
        vol = float(np.prod(a / m))
        opened = np.count_nonzero(np.all(T < a, axis=1)) / n
        closed = np.count_nonzero(np.all(T <= a, axis=1)) / n
        best = max(best, abs(opened - vol), abs(closed - vol))
    return best


def gaps(T, m):
    """h[l - 1, i] = |share with t_i < l - l / m|."""
    n, d = T.shape
    h = np.empty((m - 1, d))
    for i in range(d):
        for l in range(1, m):
            h[l - 1, i] = abs(np.count_nonzero(T[:, i] < l) / n - l / m)
    return h


def first_argmax(h):
    best, where = -1.0, None
    for i in range(h.shape[1]):
        for l in range(1, h.shape[0] + 1):
            if h[l - 1, i] > best:
                best, where = h[l - 1, i], (i, l)
    return where


def build(X, lo, hi, tau, m):
    """Breadth-first split-while-nonuniform build; returns leaves as (lower, upper, count)."""
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    inside = np.all((X >= lo) & (X <= hi), axis=1)
    X = X[inside]
    N = X.shape[0]
    final = []
    frontier = [(lo, hi, X)]
    while frontier:
        nxt = []
        for a, b, P in frontier:
            n_k = P.shape[0]
            if n_k > 2:
                T = lattice_coords(P, a, b, m)
                if lattice_dstar(T, m) > tau * math.sqrt(N) / n_k:
                    i, l = first_argmax(gaps(T, m))
                    cut = a[i] + (b[i] - a[i]) * (l / m)
                    left = T[:, i] < l
                    b_left, a_right = b.copy(), a.copy()
                    b_left[i] = cut
                    a_right[i] = cut
                    nxt.append((a, b_left, P[left]))
                    nxt.append((a_right, b, P[~left]))
                    continue
            final.append((a, b, n_k))
        frontier = nxt
    return final, N


def brute_dstar_1d(x):
    x = np.sort(np.asarray(x, dtype=np.float64))
    n = x.shape[0]
    vals = [0.0]
    for j in range(n):
        vals += [abs((j + 1) / n - x[j]), abs(j / n - x[j])]
    return max(vals)
