"""Bandwidth (tau) grid search with a coverage z-test."""
from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field
from statistics import NormalDist
from typing import Optional, Sequence

import numpy as np

from .hpd import HpdSet, coverage_estimate, density_order, estimate_hpd
from .loss import LossReport, gamma_hat, loss_estimate
from .samples import HyperRect, SampleMatrix
from .tree import DetConfig, PartitionTree, build_det

M_EFF_FLOOR = 30


def default_tau_grid(j: int = 10, hi: float = 0.5, lo: float = 0.01) -> list[float]:
    return np.geomspace(hi, lo, j).tolist()


@dataclass(frozen=True)
class BandwidthSearchConfig:
    tau_grid: tuple = tuple(default_tau_grid())
    delta: float = 0.05
    epsilon: float = 0.03  # reported only
    t_alpha: float = 1.0
    p: float = 1.0
    det: DetConfig = DetConfig()

    def __post_init__(self):
        grid = tuple(float(t) for t in self.tau_grid)
        if not grid:
            raise ValueError("tau grid is empty")
        if any(t <= 0 for t in grid) or any(a <= b for a, b in zip(grid, grid[1:])):
            raise ValueError("tau grid must be positive and strictly decreasing")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        if self.t_alpha < 1.0:
            raise ValueError("t_alpha must be >= 1")
        object.__setattr__(self, "tau_grid", grid)


@dataclass
class TauRecord:
    tau: float
    leaf_count: int
    alpha_hat: float
    test_passed: bool
    realized_coverage: float
    n_cells: int
    loss: Optional[LossReport] = None

    def to_dict(self) -> dict:
        out = {"tau": self.tau, "leaf_count": self.leaf_count, "alpha_hat": self.alpha_hat,
               "test_passed": self.test_passed, "realized_coverage": self.realized_coverage,
               "n_cells": self.n_cells}
        out.update({k: (None if self.loss is None else getattr(self.loss, k)) for k in ("fp", "fn")})
        out["total_loss"] = None if self.loss is None else self.loss.total
        return out


@dataclass
class BandwidthTrace:
    algorithm: str
    alpha: float
    records: list
    chosen_index: int
    no_pass: bool
    chosen_set: HpdSet = field(repr=False)
    gamma_hat: Optional[float] = None
    epsilon: float = 0.03

    @property
    def chosen_tau(self) -> float:
        return self.records[self.chosen_index].tau

    @property
    def chosen(self) -> TauRecord:
        return self.records[self.chosen_index]

    def to_dict(self) -> dict:
        return {"algorithm": self.algorithm, "alpha": self.alpha, "chosen_tau": self.chosen_tau,
                "no_tau_passed": self.no_pass, "gamma_hat": self.gamma_hat, "epsilon": self.epsilon,
                "records": [r.to_dict() for r in self.records]}

    def write_csv(self, path) -> None:
        cols = ["tau", "leaf_count", "alpha_hat", "test_passed", "fp", "fn", "total_loss"]
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(cols)
            for r in self.records:
                row = r.to_dict()
                w.writerow(["" if row[c] is None else row[c] for c in cols])

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def z_threshold(alpha: float, m_effective: float, delta: float = 0.05) -> float:
    if m_effective < M_EFF_FLOOR:
        raise ValueError(f"effective test size {m_effective:g} is below {M_EFF_FLOOR}; use a larger test set")
    z = NormalDist().inv_cdf(1.0 - delta / 2.0)
    return z * math.sqrt(alpha * (1.0 - alpha) / m_effective)


def coverage_test(alpha_hat: float, alpha: float, m_effective: float, delta: float = 0.05) -> bool:
    """Two-sided z-test of coverage == alpha using the null variance."""
    return abs(alpha_hat - alpha) <= z_threshold(alpha, m_effective, delta)


def _build_all(train, rect, cfg: BandwidthSearchConfig, trees) -> list[PartitionTree]:
    if trees is not None:
        if [t.tau for t in trees] != list(cfg.tau_grid):
            raise ValueError("precomputed trees do not match the tau grid")
        return list(trees)
    return [build_det(train, rect, tau, cfg.det) for tau in cfg.tau_grid]


def _scan(train, test, rect, alpha, cfg, trees, gamma):
    records, sets = [], []
    for tree in _build_all(train, rect, cfg, trees):
        hpd = estimate_hpd(tree, alpha, cfg.p, order=density_order(tree))
        cov = coverage_estimate(hpd, test, cfg.t_alpha, alpha)
        passed = coverage_test(cov.alpha_hat, alpha, cov.m_effective, cfg.delta)
        loss = loss_estimate(hpd, test, gamma, alpha) if gamma is not None else None
        records.append(TauRecord(tree.tau, tree.n_leaves, cov.alpha_hat, passed, hpd.realized_coverage,
                                 hpd.n_cells, loss))
        sets.append(hpd)
    return records, sets


def _fallback(records, alpha) -> int:
    warnings.warn("coverage test rejected every tau; the training sample may be too small", RuntimeWarning,
                  stacklevel=3)
    return int(np.argmin([abs(r.alpha_hat - alpha) for r in records]))


def select_bandwidth_intractable(train, test, rect: HyperRect, alpha: float,
                                 cfg: BandwidthSearchConfig = BandwidthSearchConfig(),
                                 trees: Optional[Sequence[PartitionTree]] = None) -> BandwidthTrace:
    """Smallest tau whose set passes the coverage test.

    ``trees`` may carry prebuilt trees (one per grid value) to share builds
    across several alpha levels.
    """
    records, sets = _scan(train, test, rect, alpha, cfg, trees, None)
    passing = [i for i, r in enumerate(records) if r.test_passed]
    no_pass = not passing
    idx = _fallback(records, alpha) if no_pass else min(passing, key=lambda i: records[i].tau)
    return BandwidthTrace("intractable", alpha, records, idx, no_pass, sets[idx], epsilon=cfg.epsilon)


def select_bandwidth_tractable(train: SampleMatrix, test: SampleMatrix, rect: HyperRect, alpha: float,
                               cfg: BandwidthSearchConfig = BandwidthSearchConfig(),
                               trees: Optional[Sequence[PartitionTree]] = None) -> BandwidthTrace:
    """Passing tau with the smallest false-positive rate (ties to the smaller tau)."""
    if train.q_values is None or test.q_values is None:
        raise ValueError("tractable selection needs q values on both train and test samples")
    gamma = gamma_hat(train.q_values, alpha)
    records, sets = _scan(train, test, rect, alpha, cfg, trees, gamma)
    passing = [i for i, r in enumerate(records) if r.test_passed]
    no_pass = not passing
    if no_pass:
        idx = _fallback(records, alpha)
    else:
        idx = min(passing, key=lambda i: (records[i].loss.fp, records[i].tau))
    return BandwidthTrace("tractable", alpha, records, idx, no_pass, sets[idx], gamma, cfg.epsilon)
