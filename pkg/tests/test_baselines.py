import math

import numpy as np
import pytest
from scipy import stats

from dethpd.baselines import bghm_set, equal_tail_intervals, shortest_intervals, sr_set


def normals(n, d, seed):
    return np.random.default_rng(seed).standard_normal((n, d))


def test_one_dim_keeps_alpha():
    X, Z = normals(20000, 1, 0), normals(20000, 1, 1)
    ps = bghm_set(X, Z, 0.9, tol=0.01)
    assert ps.alpha_uni == 0.9
    np.testing.assert_allclose(ps.intervals[0], equal_tail_intervals(X, 0.9)[0])


def test_independent_normals():
    ps = bghm_set(normals(200_000, 2, 0), normals(200_000, 2, 1), 0.9)
    assert ps.alpha_uni == pytest.approx(math.sqrt(0.9), abs=0.005)
    half = stats.norm.ppf((1 + math.sqrt(0.9)) / 2)
    np.testing.assert_allclose(np.abs(ps.intervals), half, atol=0.03)
    assert abs(ps.realized_coverage - 0.9) <= 0.002


def test_comonotone_needs_no_inflation():
    x = normals(20000, 1, 0)
    z = normals(20000, 1, 1)
    ps = bghm_set(np.hstack([x, x]), np.hstack([z, z]), 0.9, tol=0.01)
    assert ps.alpha_uni == 0.9


def test_shortest_exponential():
    X = np.random.default_rng(0).exponential(size=(200_000, 1))
    iv = shortest_intervals(X, 0.9)[0]
    assert iv[0] == pytest.approx(0.0, abs=1e-3)
    assert iv[1] == pytest.approx(-math.log(0.1), abs=0.02)
    et = equal_tail_intervals(X, 0.9)[0]
    assert iv[1] - iv[0] < et[1] - et[0]


def test_shortest_tie_takes_leftmost():
    X = np.arange(10.0).reshape(-1, 1)  # evenly spaced: every window of 5 has width 4
    np.testing.assert_array_equal(shortest_intervals(X, 0.5)[0], [0.0, 4.0])


def test_sr_close_to_bghm_for_symmetric():
    X, Z = normals(100_000, 2, 3), normals(100_000, 2, 4)
    a, b = bghm_set(X, Z, 0.9), sr_set(X, Z, 0.9)
    np.testing.assert_allclose(a.intervals, b.intervals, atol=0.05)


def test_sr_never_wider():
    X = np.random.default_rng(5).gamma(2.0, size=(5000, 3))
    for level in (0.5, 0.8, 0.95):
        sr = shortest_intervals(X, level)
        et = equal_tail_intervals(X, level)
        srt = np.sort(X, axis=0)
        gran = np.max(np.diff(srt, axis=0), axis=0)
        assert np.all(sr[:, 1] - sr[:, 0] <= et[:, 1] - et[:, 0] + gran)


def test_coverage_near_target():
    Z = normals(30000, 3, 7)
    for fn in (bghm_set, sr_set):
        ps = fn(normals(30000, 3, 6), Z, 0.9)
        assert abs(ps.realized_coverage - 0.9) <= 0.002 + 2 * math.sqrt(0.09 / 30000)
        assert ps.reached
        assert np.all(ps.intervals[:, 0] < ps.intervals[:, 1])
        assert ps.contains(Z).mean() == ps.realized_coverage


def test_unreachable_returns_widest():
    X = normals(50, 2, 0)
    Z = normals(5000, 2, 1) * 3
    ps = bghm_set(X, Z, 0.95)
    assert not ps.reached and ps.alpha_uni == 1.0
    np.testing.assert_allclose(ps.intervals, np.column_stack([X.min(0), X.max(0)]))


def test_too_few_samples():
    with pytest.raises(ValueError):
        bghm_set(normals(5, 2, 0), normals(100, 2, 1), 0.9)
