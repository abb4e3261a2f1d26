"""Symmetric-difference loss of a set estimate against the true HPD level set."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .samples import SampleMatrix


@dataclass(frozen=True)
class LossReport:
    fp: float
    fn: float
    total: float
    gamma_hat: float
    coverage: float
    lower_bound: float
    m: int

    @property
    def standard_error(self) -> float:
        """CLT standard error of ``total`` (a mean of 0/1 indicators)."""
        return math.sqrt(max(self.total * (1.0 - self.total), 0.0) / self.m)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class TemperedDiagnostic:
    beta: float
    fraction_inside: float
    u_mean: float
    u0: float

    def to_dict(self) -> dict:
        return asdict(self)


def _q_of(samples, what: str) -> np.ndarray:
    q = samples.q_values if isinstance(samples, SampleMatrix) else None
    if q is None:
        raise ValueError(f"{what} needs q values (unnormalised density column)")
    return q


def gamma_hat(q_values, alpha: float) -> float:
    """The floor((1 - alpha) n)-th smallest q value."""
    q = np.asarray(q_values, dtype=np.float64).ravel()
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    k = math.floor((1.0 - alpha) * q.shape[0] + 1e-9)
    if k < 1:
        raise ValueError(f"floor((1 - alpha) n) = 0 for n={q.shape[0]}, alpha={alpha}; "
                         "use more samples or a smaller alpha")
    return float(np.partition(q, k - 1)[k - 1])


def loss_estimate(hpd, test: SampleMatrix, gamma: float, alpha: float) -> LossReport:
    """False-positive, false-negative and total loss of ``hpd`` on independent test draws.

    ``hpd`` is anything with ``contains`` and ``realized_coverage``. Test points
    with q equal to ``gamma`` count as inside the true set.
    """
    q = _q_of(test, "loss_estimate")
    m = test.n
    if m < 1:
        raise ValueError("empty test set")
    inside = np.asarray(hpd.contains(test.values), dtype=bool)
    true_in = q >= gamma
    fp = np.count_nonzero(~true_in & inside) / m
    fn = np.count_nonzero(true_in & ~inside) / m
    return LossReport(
        fp=float(fp), fn=float(fn), total=float(fp + fn), gamma_hat=float(gamma),
        coverage=float(np.count_nonzero(inside) / m),
        lower_bound=abs(float(hpd.realized_coverage) - alpha), m=m,
    )


def tempered_diagnostic(gamma: float, tempered_test: SampleMatrix, beta: float) -> TemperedDiagnostic:
    """Share of tempered draws inside {q > gamma}, and mean of U = -log q against -log gamma.

    A good beta puts about half the tempered draws inside for symmetric U; in
    general it is the beta where ``u_mean`` matches ``u0``.
    """
    q = _q_of(tempered_test, "tempered_diagnostic")
    if not 0.0 <= beta <= 1.0:
        raise ValueError(f"beta must lie in [0, 1], got {beta}")
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    with np.errstate(divide="ignore"):
        u = -np.log(q)
    return TemperedDiagnostic(float(beta), float(np.mean(q > gamma)), float(np.mean(u)), -math.log(gamma))
