"""Product-of-marginals credible sets (equal-tail and marginal-HPD intervals).

The marginal level is tuned by bisection until the box's joint coverage on
the test samples matches the target.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .samples import SampleMatrix


@dataclass(frozen=True)
class ProductSet:
    intervals: np.ndarray  # d x 2
    alpha_uni: float
    method: str
    realized_coverage: float
    reached: bool = True
    iterations: int = 0

    def contains(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        return np.all((X >= self.intervals[:, 0]) & (X <= self.intervals[:, 1]), axis=1)

    def to_dict(self) -> dict:
        return {"intervals": self.intervals.tolist(), "alpha_uni": self.alpha_uni, "method": self.method,
                "realized_coverage": self.realized_coverage, "reached": self.reached}


def equal_tail_intervals(X: np.ndarray, level: float) -> np.ndarray:
    lo = np.quantile(X, (1.0 - level) / 2.0, axis=0)
    hi = np.quantile(X, (1.0 + level) / 2.0, axis=0)
    return np.column_stack([lo, hi])


def shortest_intervals(X: np.ndarray, level: float) -> np.ndarray:
    """Per column, the narrowest window of ceil(level n) consecutive order statistics.

    Ties go to the window with the smallest left endpoint.
    """
    n = X.shape[0]
    k = min(max(math.ceil(level * n - 1e-9), 1), n)
    srt = np.sort(X, axis=0)
    widths = srt[k - 1:] - srt[: n - k + 1]
    start = np.argmin(widths, axis=0)
    cols = np.arange(X.shape[1])
    return np.column_stack([srt[start, cols], srt[start + k - 1, cols]])


_BUILDERS = {"bghm": equal_tail_intervals, "sr": shortest_intervals}


def _values(s) -> np.ndarray:
    X = s.values if isinstance(s, SampleMatrix) else np.asarray(s, dtype=np.float64)
    return X.reshape(-1, 1) if X.ndim == 1 else X


def product_set(train, test, alpha: float, method: str = "bghm", tol: float = 0.002,
                max_iter: int = 30) -> ProductSet:
    """Box of marginal intervals whose joint test coverage is closest to ``alpha``."""
    if method not in _BUILDERS:
        raise ValueError(f"unknown product-set method {method!r}")
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    X, Z = _values(train), _values(test)
    floor = 1.0 / (1.0 - alpha)
    if X.shape[0] < floor or Z.shape[0] < floor:
        raise ValueError(f"need at least 1/(1 - alpha) = {floor:.0f} train and test samples")
    make = _BUILDERS[method]

    def evaluate(a):
        iv = make(X, a)
        cov = float(np.mean(np.all((Z >= iv[:, 0]) & (Z <= iv[:, 1]), axis=1)))
        return iv, cov

    iv, cov = evaluate(alpha)
    best = (abs(cov - alpha), alpha, iv, cov)
    if abs(cov - alpha) <= tol or cov > alpha:
        # joint coverage cannot be raised by shrinking below alpha; accept
        return ProductSet(iv, alpha, method, cov, True, 0)
    iv_max, cov_max = evaluate(1.0)
    if cov_max < alpha - tol:
        return ProductSet(iv_max, 1.0, method, cov_max, False, 0)
    lo, hi = alpha, 1.0
    it = 0
    for it in range(1, max_iter + 1):
        mid = 0.5 * (lo + hi)
        iv, cov = evaluate(mid)
        if abs(cov - alpha) < best[0]:
            best = (abs(cov - alpha), mid, iv, cov)
        if abs(cov - alpha) <= tol:
            break
        if cov < alpha:
            lo = mid
        else:
            hi = mid
    _, a, iv, cov = best
    return ProductSet(iv, float(a), method, cov, best[0] <= tol, it)


def bghm_set(train, test, alpha: float, tol: float = 0.002) -> ProductSet:
    return product_set(train, test, alpha, "bghm", tol)


def sr_set(train, test, alpha: float, tol: float = 0.002) -> ProductSet:
    return product_set(train, test, alpha, "sr", tol)
