import warnings

import numpy as np
import pytest
from scipy.special import expit

from dethpd.baselines import ProductSet
from dethpd.calibration import CalibrationDataset, CalibrationModel, build_calibration_dataset, calibrate_at, \
    fit_logistic, parse_col_range
from dethpd.samples import DataError


def box(lo, hi):
    return ProductSet(np.array([[lo, hi]], dtype=float), 0.9, "bghm", 0.9)


def prior_predictive(n, seed):
    rng = np.random.default_rng(seed)
    theta = rng.standard_normal(n)
    return theta[:, None], theta + rng.standard_normal(n)


def test_labels_full_and_empty():
    th, y = prior_predictive(200, 0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        assert build_calibration_dataset(box(-100, 100), th, y).labels.all()
        assert not build_calibration_dataset(box(50, 60), th, y).labels.any()


def test_label_rate_matches_prior_mass():
    th, y = prior_predictive(20000, 1)
    ds = build_calibration_dataset(box(-1.645, 1.645), th, y)
    assert ds.labels.mean() == pytest.approx(0.90, abs=0.01)
    assert sum(ds.class_counts) == 20000


def test_too_few_rows():
    th, y = prior_predictive(10, 0)
    with pytest.raises(DataError):
        build_calibration_dataset(box(-1, 1), th, y)


def test_degenerate_all_ones():
    n = 500
    m = fit_logistic(CalibrationDataset(np.zeros((n, 1)), np.random.default_rng(0).random(n), np.ones(n)))
    c, _ = calibrate_at(m, [0.3])
    assert c == pytest.approx((n + 1) / (n + 2))
    assert calibrate_at(m, [100.0])[0] == c


def test_separable_flagged():
    y = np.linspace(-3, 3, 400)
    m = fit_logistic(CalibrationDataset(np.zeros((400, 1)), y, y > 0))
    assert m.separable_flag and m.converged
    assert np.all(np.isfinite(m.coefficients))
    assert calibrate_at(m, [2.0])[0] > 0.9 and calibrate_at(m, [-2.0])[0] < 0.1


def test_recovers_coefficients():
    rng = np.random.default_rng(3)
    y = rng.standard_normal(10_000)
    labels = rng.random(10_000) < expit(0.5 + 2 * y)
    m = fit_logistic(CalibrationDataset(np.zeros((10_000, 1)), y, labels))
    assert m.converged and not m.separable_flag
    np.testing.assert_allclose(m.coefficients, [0.5, 2.0], atol=0.1)


def test_standard_error_matches_spread():
    rng = np.random.default_rng(4)
    estimates, ses = [], []
    for _ in range(40):
        y = rng.standard_normal(2000)
        labels = rng.random(2000) < expit(0.2 + y)
        c, se = calibrate_at(fit_logistic(CalibrationDataset(np.zeros((2000, 1)), y, labels)), [0.5])
        estimates.append(c)
        ses.append(se)
    assert np.std(estimates) == pytest.approx(np.mean(ses), rel=0.35)


def test_permutation_invariance():
    rng = np.random.default_rng(5)
    y = rng.standard_normal(3000)
    labels = rng.random(3000) < expit(1 - y**2)
    a = fit_logistic(CalibrationDataset(np.zeros((3000, 1)), y, labels), degree=2)
    p = rng.permutation(3000)
    b = fit_logistic(CalibrationDataset(np.zeros((3000, 1)), y[p], labels[p]), degree=2)
    np.testing.assert_allclose(a.coefficients, b.coefficients, rtol=1e-8, atol=1e-10)


def test_independent_labels_flat():
    th, y = prior_predictive(10_000, 6)
    # a set of prior mass 0.6 whose membership ignores y: label a shuffled copy of theta
    rng = np.random.default_rng(7)
    shuffled = rng.permutation(th[:, 0])[:, None]
    ds = build_calibration_dataset(box(-0.8416, 0.8416), shuffled, y)
    m = fit_logistic(ds)
    grid = np.linspace(y.min(), y.max(), 50)
    preds = m.predict(grid)
    assert preds.max() - preds.min() < 0.1


def test_growing_set_grows_labels_and_estimate():
    th, y = prior_predictive(10_000, 8)
    small = build_calibration_dataset(box(-1.0, 1.0), th, y)
    big = build_calibration_dataset(box(-1.2, 1.3), th, y)
    assert np.all(big.labels[small.labels])
    c_s, se_s = calibrate_at(fit_logistic(small, degree=2), [0.2])
    c_b, se_b = calibrate_at(fit_logistic(big, degree=2), [0.2])
    assert c_b >= c_s - 3 * max(se_s, se_b)


def test_model_json_round_trip():
    rng = np.random.default_rng(9)
    y = rng.standard_normal(1000)
    m = fit_logistic(CalibrationDataset(np.zeros((1000, 1)), y, rng.random(1000) < expit(y)), degree=2)
    back = CalibrationModel.from_dict(m.to_dict())
    assert calibrate_at(back, [0.4]) == calibrate_at(m, [0.4])


def test_parse_col_range():
    assert parse_col_range("0..2") == slice(0, 3)
    assert parse_col_range("3") == slice(3, 4)
    with pytest.raises(ValueError):
        parse_col_range("2..1")
    with pytest.raises(ValueError):
        parse_col_range("a..b")
