import csv
import math
import warnings

import numpy as np
import pytest
from scipy import stats

from dethpd.bandwidth import BandwidthSearchConfig, coverage_test, default_tau_grid, \
    select_bandwidth_intractable, select_bandwidth_tractable, z_threshold
from dethpd.samples import SampleMatrix, estimate_truncation
from dethpd.targets import get_target


@pytest.fixture(scope="module")
def gauss_data():
    T = get_target("gauss")
    train, test = T.draw(20000, seed=1), T.draw(5000, seed=2)
    return train, test, estimate_truncation(train).rect


def test_threshold_values():
    z = stats.norm.ppf(0.975)
    assert z_threshold(0.9, 30000) == pytest.approx(z * math.sqrt(0.09 / 30000))
    assert z_threshold(0.9, 30000) == pytest.approx(0.003394, abs=1e-6)
    assert z_threshold(0.9, 30000 / 4) == pytest.approx(0.006789, abs=1e-6)
    assert coverage_test(0.9, 0.9, 100)
    assert coverage_test(0.9033, 0.9, 30000)
    assert not coverage_test(0.9035, 0.9, 30000)
    with pytest.raises(ValueError, match="below 30"):
        coverage_test(0.9, 0.9, 29)


def test_default_grid():
    g = default_tau_grid()
    assert len(g) == 10 and g[0] == pytest.approx(0.5) and g[-1] == pytest.approx(0.01)
    assert all(a > b for a, b in zip(g, g[1:]))


def test_config_validation():
    with pytest.raises(ValueError):
        BandwidthSearchConfig(tau_grid=())
    with pytest.raises(ValueError):
        BandwidthSearchConfig(tau_grid=(0.1, 0.2))
    with pytest.raises(ValueError):
        BandwidthSearchConfig(delta=1.5)


def test_algorithm1_picks_smallest_passing(gauss_data):
    train, test, rect = gauss_data
    tr = select_bandwidth_intractable(train, test, rect, 0.9)
    assert [r.tau for r in tr.records] == list(BandwidthSearchConfig().tau_grid)
    passing = [r.tau for r in tr.records if r.test_passed]
    assert passing and tr.chosen_tau == min(passing)
    assert not tr.no_pass


def test_algorithm2_minimises_fp(gauss_data):
    train, test, rect = gauss_data
    tr = select_bandwidth_tractable(train, test, rect, 0.9)
    passing = [r for r in tr.records if r.test_passed]
    best = min(r.loss.fp for r in passing)
    assert tr.chosen.loss.fp == best
    assert tr.chosen_tau == min(r.tau for r in passing if r.loss.fp == best)
    for r in tr.records:
        assert r.loss.total == r.loss.fp + r.loss.fn


def test_reruns_identical(gauss_data):
    train, test, rect = gauss_data
    a = select_bandwidth_tractable(train, test, rect, 0.9).to_json()
    b = select_bandwidth_tractable(train, test, rect, 0.9).to_json()
    assert a == b


def test_all_pass_at_full_coverage():
    T = get_target("gauss")
    train, test = T.draw(200, 1), T.draw(200, 2)
    rect = estimate_truncation(train).rect
    cfg = BandwidthSearchConfig(tau_grid=(50.0, 20.0, 10.0))
    # every tau gives a single leaf holding all training points; alpha just below 1 keeps the test defined
    tr = select_bandwidth_intractable(train, test, rect, 0.999, cfg)
    assert all(r.leaf_count == 1 for r in tr.records)
    assert tr.chosen_tau == 10.0


def test_no_pass_is_flagged():
    T = get_target("donut")
    train, test = T.draw(100, 1), T.draw(3000, 2)
    rect = estimate_truncation(train).rect
    cfg = BandwidthSearchConfig(tau_grid=(0.5,))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        tr = select_bandwidth_intractable(train, test, rect, 0.9, cfg)
    assert tr.chosen_tau == 0.5
    assert tr.no_pass == (not tr.records[0].test_passed)
    assert tr.no_pass == any("rejected every tau" in str(w.message) for w in caught)


def test_missing_q_for_tractable():
    X = SampleMatrix(np.random.default_rng(0).standard_normal((500, 2)))
    with pytest.raises(ValueError, match="q values"):
        select_bandwidth_tractable(X, X, estimate_truncation(X).rect, 0.9)


def test_trace_csv(tmp_path, gauss_data):
    train, test, rect = gauss_data
    tr = select_bandwidth_tractable(train, test, rect, 0.9, BandwidthSearchConfig(tau_grid=(0.3, 0.1)))
    p = tmp_path / "trace.csv"
    tr.write_csv(p)
    rows = list(csv.DictReader(open(p)))
    assert [float(r["tau"]) for r in rows] == [0.3, 0.1]
    assert set(rows[0]) == {"tau", "leaf_count", "alpha_hat", "test_passed", "fp", "fn", "total_loss"}


def test_precomputed_trees_must_match_grid(gauss_data):
    train, test, rect = gauss_data
    from dethpd.tree import build_det
    with pytest.raises(ValueError):
        select_bandwidth_intractable(train, test, rect, 0.9, BandwidthSearchConfig(tau_grid=(0.3, 0.1)),
                                     trees=[build_det(train, rect, 0.3)])
