"""Closed-form references: Gaussian HPD balls, nested-set losses, 1-d discrepancy."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammainc


def chi2_quantile(p: float, d: int, tol: float = 1e-13) -> float:
    """Quantile of the chi-square law with d degrees of freedom, by bisection on its CDF."""
    if not 0.0 <= p < 1.0:
        raise ValueError("p must lie in [0, 1)")
    if d == 2:
        return -2.0 * math.log1p(-p)
    lo, hi = 0.0, max(1.0, 2.0 * d)
    while gammainc(d / 2.0, hi / 2.0) < p:
        hi *= 2.0
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if gammainc(d / 2.0, mid / 2.0) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class AnalyticGaussianHpd:
    """Level-alpha HPD ball of N(0, I_d)."""

    dim: int
    alpha: float

    @property
    def radius_sq(self) -> float:
        return chi2_quantile(self.alpha, self.dim)

    @property
    def realized_coverage(self) -> float:
        return self.alpha

    def contains(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        return np.einsum("ij,ij->i", X, X) < self.radius_sq


def gaussian_hpd_contains(oracle: AnalyticGaussianHpd, x) -> bool:
    x = np.asarray(x, dtype=np.float64).ravel()
    return bool(x @ x < oracle.radius_sq)


def exact_loss_between(a: AnalyticGaussianHpd, b: AnalyticGaussianHpd) -> float:
    """Probability of the symmetric difference of two nested balls under N(0, I)."""
    if a.dim != b.dim:
        raise ValueError("oracles differ in dimension")
    return abs(a.alpha - b.alpha)


def brute_discrepancy_1d(points) -> float:
    """Exact star discrepancy of a 1-d point set."""
    x = np.sort(np.asarray(points, dtype=np.float64).ravel())
    n = x.shape[0]
    if n == 0:
        raise ValueError("empty point set")
    j = np.arange(1, n + 1)
    return float(max(np.max(j / n - x), np.max(x - (j - 1) / n)))
