"""Coverage calibration: regress set-membership of simulated parameters on their data.

The user simulates (theta, y) pairs from prior times likelihood; a parameter
draw's membership in the credible set is a Bernoulli outcome whose mean,
as a function of y, is the true coverage of the set at that y.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import expit

from .samples import DataError

MIN_ROWS = 50


@dataclass(frozen=True)
class CalibrationDataset:
    thetas: np.ndarray
    ys: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        thetas = np.atleast_2d(np.asarray(self.thetas, dtype=np.float64))
        ys = np.asarray(self.ys, dtype=np.float64)
        ys = ys.reshape(-1, 1) if ys.ndim == 1 else ys
        labels = np.asarray(self.labels, dtype=bool).ravel()
        if not thetas.shape[0] == ys.shape[0] == labels.shape[0]:
            raise DataError("thetas, ys and labels must have the same number of rows")
        object.__setattr__(self, "thetas", thetas)
        object.__setattr__(self, "ys", ys)
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.labels.shape[0]

    @property
    def class_counts(self) -> tuple[int, int]:
        ones = int(np.count_nonzero(self.labels))
        return self.n - ones, ones

    @property
    def degenerate(self) -> bool:
        return 0 in self.class_counts


def build_calibration_dataset(cred_set, thetas, ys) -> CalibrationDataset:
    """Label each simulated parameter by membership in ``cred_set``."""
    thetas = np.atleast_2d(np.asarray(thetas, dtype=np.float64))
    if thetas.shape[0] < MIN_ROWS:
        raise DataError(f"calibration needs at least {MIN_ROWS} simulated pairs, got {thetas.shape[0]}")
    ds = CalibrationDataset(thetas, ys, cred_set.contains(thetas))
    if ds.degenerate:
        warnings.warn("all calibration labels are equal; the fitted coverage will be a clamped constant",
                      RuntimeWarning, stacklevel=2)
    return ds


def parse_col_range(spec: str) -> slice:
    """'a..b' (0-based, inclusive) or a single index 'a' to a column slice."""
    try:
        if ".." in spec:
            a, b = (int(s) for s in spec.split("..", 1))
        else:
            a = b = int(spec)
    except ValueError:
        raise ValueError(f"bad column range {spec!r}; expected 'a..b'") from None
    if a < 0 or b < a:
        raise ValueError(f"bad column range {spec!r}")
    return slice(a, b + 1)


def poly_features(ys: np.ndarray, degree: int) -> np.ndarray:
    """Columns y_j, y_j^2, ..., y_j^degree for every summary j (no cross terms)."""
    ys = np.asarray(ys, dtype=np.float64)
    ys = ys.reshape(-1, 1) if ys.ndim == 1 else ys
    return np.hstack([ys**k for k in range(1, degree + 1)])


@dataclass
class CalibrationModel:
    coefficients: np.ndarray  # intercept first, then one per feature
    covariance: np.ndarray
    converged: bool
    iterations: int
    separable_flag: bool = False
    degree: int = 1
    ridge: float = 0.0
    n: int = 0
    constant: Optional[float] = None
    info: dict = field(default_factory=dict)

    def design(self, ys) -> np.ndarray:
        F = poly_features(np.atleast_2d(np.asarray(ys, dtype=np.float64)), self.degree)
        return np.hstack([np.ones((F.shape[0], 1)), F])

    def predict(self, ys) -> np.ndarray:
        ys = np.asarray(ys, dtype=np.float64)
        ys = ys.reshape(-1, 1) if ys.ndim == 1 else ys
        if self.constant is not None:
            return np.full(ys.shape[0], self.constant)
        return expit(self.design(ys) @ self.coefficients)

    def to_dict(self) -> dict:
        return {"coefficients": self.coefficients.tolist(), "covariance": self.covariance.tolist(),
                "converged": self.converged, "iterations": self.iterations,
                "separable_flag": self.separable_flag, "degree": self.degree, "ridge": self.ridge,
                "n": self.n, "constant": self.constant}

    @classmethod
    def from_dict(cls, data: dict) -> "CalibrationModel":
        return cls(np.asarray(data["coefficients"], dtype=np.float64),
                   np.asarray(data["covariance"], dtype=np.float64), bool(data["converged"]),
                   int(data["iterations"]), bool(data["separable_flag"]), int(data.get("degree", 1)),
                   float(data.get("ridge", 0.0)), int(data.get("n", 0)), data.get("constant"))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _irls(A: np.ndarray, t: np.ndarray, ridge: float, max_iter: int, tol: float, blowup: float):
    """Newton/IRLS on standardized features; the intercept is not penalized."""
    k = A.shape[1]
    P = ridge * np.eye(k)
    P[0, 0] = 0.0
    beta = np.zeros(k)
    for it in range(1, max_iter + 1):
        mu = expit(A @ beta)
        w = mu * (1.0 - mu)
        H = (A.T * w) @ A + P
        g = A.T @ (t - mu) - P @ beta
        try:
            step = np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            return beta, H, False, it, True
        beta = beta + step
        if not np.all(np.isfinite(beta)) or np.max(np.abs(beta)) > blowup:
            return beta, H, False, it, True
        if np.max(np.abs(step)) < tol:
            mu = expit(A @ beta)
            H = (A.T * (mu * (1.0 - mu))) @ A + P
            return beta, H, True, it, False
    return beta, H, False, max_iter, False


def fit_logistic(dataset: CalibrationDataset, max_iter: int = 100, ridge: float = 0.0, degree: int = 1,
                 tol: float = 1e-8, fallback_ridge: float = 1.0) -> CalibrationModel:
    """Penalized maximum-likelihood logistic regression of labels on polynomial features of y.

    A coefficient norm that runs away (perfect or quasi separation) triggers a
    refit with ``fallback_ridge`` and sets ``separable_flag``.
    """
    if ridge < 0:
        raise ValueError("ridge must be >= 0")
    if degree < 1:
        raise ValueError("degree must be >= 1")
    n = dataset.n
    t = dataset.labels.astype(np.float64)
    F = poly_features(dataset.ys, degree)
    k = F.shape[1] + 1
    if dataset.degenerate:
        c = min(max(float(t.mean()), 1.0 / (n + 2)), 1.0 - 1.0 / (n + 2))
        coef = np.zeros(k)
        coef[0] = math.log(c / (1.0 - c))
        cov = np.zeros((k, k))
        cov[0, 0] = 1.0 / (n * c * (1.0 - c))
        return CalibrationModel(coef, cov, True, 0, False, degree, ridge, n, constant=c)

    center = F.mean(axis=0)
    scale = F.std(axis=0)
    scale[scale == 0] = 1.0
    A = np.hstack([np.ones((n, 1)), (F - center) / scale])
    blowup = 30.0
    beta, H, converged, iters, diverged = _irls(A, t, ridge, max_iter, tol, blowup)
    separable = diverged
    used_ridge = ridge
    if diverged:
        used_ridge = max(ridge, fallback_ridge)
        beta, H, converged, iters, diverged = _irls(A, t, used_ridge, max_iter, tol, math.inf)
    if not converged:
        warnings.warn(f"logistic fit did not converge in {max_iter} iterations", RuntimeWarning, stacklevel=2)
    # back to the raw feature scale: beta_raw = T beta_std
    T = np.eye(k)
    T[1:, 1:] = np.diag(1.0 / scale)
    T[0, 1:] = -center / scale
    cov_std = np.linalg.pinv(H)
    return CalibrationModel(T @ beta, T @ cov_std @ T.T, converged, iters, separable, degree, used_ridge, n)


def calibrate_at(model: CalibrationModel, y_obs) -> tuple[float, float]:
    """Estimated true coverage at ``y_obs`` and its delta-method standard error."""
    y = np.atleast_2d(np.asarray(y_obs, dtype=np.float64))
    if model.constant is not None:
        c = model.constant
        return float(c), float(math.sqrt(c * (1.0 - c) / max(model.n, 1)))
    x = model.design(y)[0]
    c = float(expit(x @ model.coefficients))
    se_eta = math.sqrt(max(float(x @ model.covariance @ x), 0.0))
    return c, c * (1.0 - c) * se_eta
