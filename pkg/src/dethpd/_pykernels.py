"""Pure numpy implementation of the tree-building and query kernels.

This is the reference backend. ``_ckernels.pyx`` mirrors it operation for
operation so both backends return bit-identical results; any change here
must be made there too.
"""
import numpy as np

BACKEND = "python"

_MASK64 = (1 << 64) - 1


def splitmix64(state):
    """Advance a splitmix64 state; returns ``(new_state, output)``."""
    state = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return state, z ^ (z >> 31)


def child_key(key, side):
    return splitmix64((key ^ ((side + 1) * 0xD1B54A32D192ED03)) & _MASK64)[1]


def _local_scaled(X, idx, lower, upper, m):
    return (X[idx] - lower) / (upper - lower) * m


def _bins(X, idx, lower, upper, m):
    t = _local_scaled(X, idx, lower, upper, m)
    open_bins = np.clip(np.floor(t) + 1.0, 1.0, m + 1.0).astype(np.int64)
    closed_bins = np.clip(np.ceil(t), 0.0, float(m)).astype(np.int64)
    return open_bins, closed_bins


def _max_gap(open_bins, n, m):
    d = open_bins.shape[1]
    best_h = -1.0
    best_dim = 0
    best_l = 1
    grid = np.arange(1, m) / m
    for i in range(d):
        counts = np.bincount(open_bins[:, i], minlength=m + 2)
        below = np.cumsum(counts)[1:m]  # #{open <= l}, l = 1..m-1
        h = np.abs(below / n - grid)
        j = int(np.argmax(h))
        if h[j] > best_h:
            best_h = float(h[j])
            best_dim = i
            best_l = j + 1
    return best_dim, best_l, best_h


def _corner_volumes(m, d):
    g = np.arange(m + 1) / m
    vol = g
    for _ in range(d - 1):
        vol = vol[..., None] * g
    return vol


def _exhaustive(open_bins, closed_bins, n, m):
    d = open_bins.shape[1]
    shape = (m + 1,) * d
    keep = np.all(open_bins <= m, axis=1)
    h_open = np.bincount(
        np.ravel_multi_index(tuple(open_bins[keep].T), shape), minlength=(m + 1) ** d
    ).reshape(shape)
    h_closed = np.bincount(
        np.ravel_multi_index(tuple(closed_bins.T), shape), minlength=(m + 1) ** d
    ).reshape(shape)
    for ax in range(d):
        h_open = np.cumsum(h_open, axis=ax)
        h_closed = np.cumsum(h_closed, axis=ax)
    vol = _corner_volumes(m, d)
    value = max(
        float(np.max(np.abs(h_open / n - vol))), float(np.max(np.abs(h_closed / n - vol)))
    )
    return value, (m + 1) ** d


def _ascent(open_bins, closed_bins, n, m, budget, starts, key, threshold):
    d = open_bins.shape[1]
    best = 0.0
    evals = 0
    state = key
    ts = np.arange(m + 1) / m
    for s in range(starts):
        corner = [m] * d
        if s > 0:
            for i in range(d):
                state, r = splitmix64(state)
                corner[i] = 1 + r % m
        lim = np.asarray(corner, dtype=np.int64)
        viol_o = np.sum(open_bins > lim, axis=1)
        viol_c = np.sum(closed_bins > lim, axis=1)
        while True:
            moved = False
            for i in range(d):
                if evals + m + 1 > budget:
                    return best, evals
                evals += m + 1
                p = 1.0
                for k in range(d):
                    if k != i:
                        p = p * (corner[k] / m)
                col_o = open_bins[:, i]
                col_c = closed_bins[:, i]
                el_o = (viol_o - (col_o > corner[i])) == 0
                el_c = (viol_c - (col_c > corner[i])) == 0
                co = np.cumsum(np.bincount(col_o[el_o], minlength=m + 2))[: m + 1]
                cc = np.cumsum(np.bincount(col_c[el_c], minlength=m + 2))[: m + 1]
                vol = p * ts
                val = np.maximum(np.abs(co / n - vol), np.abs(cc / n - vol))
                t_star = int(np.argmax(val))
                v_star = float(val[t_star])
                if v_star > best:
                    best = v_star
                if best > threshold:
                    return best, evals
                if v_star > val[corner[i]]:
                    viol_o += (col_o > t_star).astype(np.int64) - (col_o > corner[i])
                    viol_c += (col_c > t_star).astype(np.int64) - (col_c > corner[i])
                    corner[i] = t_star
                    moved = True
            if not moved:
                break
    return best, evals


def scan_leaf(X, idx, lower, upper, m, budget, starts, key, threshold):
    """Star discrepancy estimate and max gap for the points ``X[idx]`` of one cell.

    Returns ``(dstar, evals, dim, bin, h_max)``. The discrepancy search stops
    early once it exceeds ``threshold`` (pass ``inf`` for a full search).
    """
    idx = np.asarray(idx, dtype=np.int64)
    n = idx.shape[0]
    d = X.shape[1]
    open_bins, closed_bins = _bins(X, idx, lower, upper, m)
    dim, l, h = _max_gap(open_bins, n, m)
    if m**d <= budget:
        dstar, evals = _exhaustive(open_bins, closed_bins, n, m)
    else:
        dstar, evals = _ascent(open_bins, closed_bins, n, m, budget, starts, key, threshold)
    return dstar, evals, dim, l, h


def gap_table(X, idx, lower, upper, m):
    """Full (m-1) x d table of gap values for the cell points."""
    idx = np.asarray(idx, dtype=np.int64)
    n = idx.shape[0]
    open_bins, _ = _bins(X, idx, lower, upper, m)
    grid = np.arange(1, m) / m
    table = np.empty((m - 1, X.shape[1]))
    for i in range(X.shape[1]):
        below = np.cumsum(np.bincount(open_bins[:, i], minlength=m + 2))[1:m]
        table[:, i] = np.abs(below / n - grid)
    return table


def split_points(X, idx, lower, upper, m, dim, l):
    """Stable partition of ``idx`` into points left / right of grid line ``l``."""
    idx = np.asarray(idx, dtype=np.int64)
    t = (X[idx, dim] - lower[dim]) / (upper[dim] - lower[dim]) * m
    open_bins = np.clip(np.floor(t) + 1.0, 1.0, m + 1.0)
    left = open_bins <= l
    return idx[left], idx[~left]


def descend(X, feature, threshold, left, right, leaf_index, rect_lower, rect_upper):
    """Leaf index for each row of ``X``; -1 for rows outside the closed root box."""
    X = np.asarray(X, dtype=np.float64)
    out = np.full(X.shape[0], -1, dtype=np.int64)
    inside = np.all((X >= rect_lower) & (X <= rect_upper), axis=1)
    rows = np.flatnonzero(inside)
    node = np.zeros(rows.shape[0], dtype=np.int64)
    active = np.flatnonzero(feature[node] >= 0)
    while active.size:
        nd = node[active]
        go_left = X[rows[active], feature[nd]] < threshold[nd]
        node[active] = np.where(go_left, left[nd], right[nd])
        active = active[feature[node[active]] >= 0]
    out[rows] = leaf_index[node]
    return out
