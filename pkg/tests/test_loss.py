import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from dethpd.loss import gamma_hat, loss_estimate, tempered_diagnostic
from dethpd.oracles import AnalyticGaussianHpd
from dethpd.samples import SampleMatrix
from dethpd.targets import gauss_q


class Everything:
    realized_coverage = 1.0

    def contains(self, X):
        return np.ones(len(X), dtype=bool)


class Nothing:
    realized_coverage = 0.0

    def contains(self, X):
        return np.zeros(len(X), dtype=bool)


def gauss_test(m, seed, scale=1.0):
    Z = np.random.default_rng(seed).standard_normal((m, 2)) * scale
    return SampleMatrix(Z, gauss_q(Z))


def test_gamma_index():
    q = np.array([5.0, 3.0, 9.0, 1.0, 7.0, 2.0, 8.0, 4.0, 6.0, 10.0])
    assert gamma_hat(q, 0.9) == 1.0
    q100 = np.random.default_rng(0).permutation(np.arange(1.0, 101.0))
    assert gamma_hat(q100, 0.5) == 50.0
    with pytest.raises(ValueError, match="more samples"):
        gamma_hat(np.ones(5), 0.9)


def test_trivial_sets():
    test = gauss_test(2000, 1)
    g = gamma_hat(gauss_test(5000, 2).q_values, 0.9)
    below = np.mean(test.q_values < g)
    full = loss_estimate(Everything(), test, g, 0.9)
    assert full.fn == 0 and full.fp == pytest.approx(below)
    empty = loss_estimate(Nothing(), test, g, 0.9)
    assert empty.fp == 0 and empty.fn == pytest.approx(1 - below)
    assert full.total == full.fp + full.fn


def test_ties_count_as_inside():
    test = SampleMatrix(np.zeros((3, 1)), [1.0, 2.0, 3.0])
    rep = loss_estimate(Nothing(), test, 2.0, 0.5)
    assert rep.fn == pytest.approx(2 / 3)


def test_missing_q():
    with pytest.raises(ValueError, match="q values"):
        loss_estimate(Everything(), SampleMatrix(np.zeros((3, 2))), 1.0, 0.9)


def test_nested_discs():
    test = gauss_test(10**5, 3)
    g = gamma_hat(gauss_test(10**5, 4).q_values, 0.9)
    rep = loss_estimate(AnalyticGaussianHpd(2, 0.8), test, g, 0.9)
    assert rep.total == pytest.approx(0.1, abs=3 * math.sqrt(0.09 / 10**5) + 0.002)
    assert rep.lower_bound == pytest.approx(0.1)


def test_tempered_rule_of_thumb():
    alpha = 0.9
    g = math.exp(0.5 * math.log(1 - alpha) * 2)  # q at the true boundary |x|^2 = -2 log(0.1)
    beta = -1 / math.log(1 - alpha)
    diag = tempered_diagnostic(g, gauss_test(10**5, 5, scale=1 / math.sqrt(beta)), beta)
    # U = |x|^2 / 2 has mean 1/beta = U0 under the tempered law
    assert diag.u_mean == pytest.approx(diag.u0, rel=0.01)
    assert diag.fraction_inside == pytest.approx(1 - math.exp(-1), abs=0.01)
    at_one = tempered_diagnostic(g, gauss_test(10**5, 6), 1.0)
    assert at_one.fraction_inside == pytest.approx(alpha, abs=0.01)
    all_in = tempered_diagnostic(1e-12, gauss_test(100, 7), 0.5)
    assert all_in.fraction_inside == 1.0


@settings(max_examples=100, deadline=None)
@given(arrays(np.float64, st.integers(10, 200), elements=st.floats(1e-6, 1e6)),
       st.floats(0.01, 0.9), st.floats(1e-3, 1e3))
def test_gamma_equivariance(q, alpha, c):
    if math.floor((1 - alpha) * q.shape[0] + 1e-9) < 1:
        return
    assert gamma_hat(c * q, alpha) == pytest.approx(c * gamma_hat(q, alpha), rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31))
def test_permutation_and_rescaling_invariance(seed):
    rng = np.random.default_rng(seed)
    test = gauss_test(500, seed)
    oracle = AnalyticGaussianHpd(2, 0.85)
    g = gamma_hat(test.q_values, 0.9)
    base = loss_estimate(oracle, test, g, 0.9)
    perm = rng.permutation(500)
    assert loss_estimate(oracle, test.take(perm), g, 0.9) == base
    scaled = SampleMatrix(test.values, 4.0 * test.q_values)
    assert loss_estimate(oracle, scaled, gamma_hat(scaled.q_values, 0.9), 0.9).total == base.total
