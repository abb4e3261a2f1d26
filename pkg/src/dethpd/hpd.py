"""HPD set estimates as unions of the highest-density tree leaves."""
from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .samples import HyperRect, SampleMatrix
from .tree import PartitionTree


@dataclass(frozen=True)
class CoverageReport:
    alpha_hat: float
    m_effective: float
    standard_error: float
    m: int

    def to_dict(self) -> dict:
        return {"alpha_hat": self.alpha_hat, "m": self.m, "m_effective": self.m_effective,
                "standard_error": self.standard_error}


def density_order(tree: PartitionTree) -> np.ndarray:
    """Leaf ids by decreasing density; empty leaves last, ties by id."""
    with np.errstate(divide="ignore"):
        key = np.log(tree.counts) - tree.log_volumes
    key = np.where(tree.counts > 0, key, -np.inf)
    return np.lexsort((np.arange(tree.n_leaves), -key)).astype(np.int64)


@dataclass
class HpdSet:
    """Prefix of the density-ordered leaves of a tree.

    ``tree`` may be absent when the set was loaded from JSON without one; then
    membership falls back to scanning the stored cells.
    """

    leaf_ids: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    counts: np.ndarray
    rect: HyperRect
    alpha_target: float
    realized_coverage: float
    tau: float
    p: float = 1.0
    tree: Optional[PartitionTree] = field(default=None, repr=False)
    tree_ref: Optional[str] = None

    @property
    def n_cells(self) -> int:
        return int(self.leaf_ids.shape[0])

    @property
    def volume(self) -> float:
        return float(np.sum(np.prod(self.upper - self.lower, axis=1)))

    def contains(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if self.tree is not None:
            mask = np.zeros(self.tree.n_leaves + 1, dtype=bool)  # slot -1 stays False
            mask[self.leaf_ids] = True
            return mask[self.tree.leaf_of(X)]
        return self.contains_brute(X)

    def contains_brute(self, X) -> np.ndarray:
        """O(K) scan over included cells; same half-open convention as the tree."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        out = np.zeros(X.shape[0], dtype=bool)
        top = self.rect.upper
        for lo, hi in zip(self.lower, self.upper):
            below = (X < hi) | ((hi == top) & (X <= hi))
            out |= np.all((X >= lo) & below, axis=1)
        return out

    def to_dict(self, include_tree: bool = False) -> dict:
        out = {
            "alpha_target": self.alpha_target, "realized_coverage": self.realized_coverage,
            "tau": self.tau, "p": self.p, "tree_ref": self.tree_ref, "rect": self.rect.to_dict(),
            "leaves": [{"id": int(k), "lower": lo.tolist(), "upper": hi.tolist(), "count": int(c)}
                       for k, lo, hi, c in zip(self.leaf_ids, self.lower, self.upper, self.counts)],
        }
        if include_tree and self.tree is not None:
            out["tree"] = self.tree.to_dict()
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "HpdSet":
        leaves = data["leaves"]
        d = len(data["rect"]["lower"])
        tree = PartitionTree.from_dict(data["tree"]) if data.get("tree") else None
        return cls(
            leaf_ids=np.array([r["id"] for r in leaves], dtype=np.int64),
            lower=np.array([r["lower"] for r in leaves], dtype=np.float64).reshape(-1, d),
            upper=np.array([r["upper"] for r in leaves], dtype=np.float64).reshape(-1, d),
            counts=np.array([r["count"] for r in leaves], dtype=np.int64),
            rect=HyperRect.from_dict(data["rect"]), alpha_target=float(data["alpha_target"]),
            realized_coverage=float(data["realized_coverage"]), tau=float(data["tau"]),
            p=float(data.get("p", 1.0)), tree=tree, tree_ref=data.get("tree_ref"),
        )


def tree_digest(tree: PartitionTree) -> str:
    return hashlib.sha256(tree.to_json().encode()).hexdigest()[:16]


def estimate_hpd(tree: PartitionTree, alpha: float, p: float = 1.0, order=None,
                 with_ref: bool = False) -> HpdSet:
    """Smallest density-ordered prefix whose coverage is closest to alpha / p.

    Coverage counts are relative to N, the training samples inside the box.
    ``order`` lets callers reuse a precomputed :func:`density_order`.
    """
    if not 0.0 < p <= 1.0:
        raise ValueError(f"p must lie in (0, 1], got {p}")
    if not 0.0 < alpha <= p:
        raise ValueError(f"alpha must lie in (0, p={p}], got {alpha}")
    if order is None:
        order = density_order(tree)
    cum = np.cumsum(tree.counts[order]) / tree.N
    k = int(np.argmin(np.abs(cum - alpha / p))) + 1  # argmin returns the first minimiser
    ids = order[:k]
    return HpdSet(
        leaf_ids=ids, lower=tree.lower[ids], upper=tree.upper[ids], counts=tree.counts[ids],
        rect=tree.rect, alpha_target=float(alpha), realized_coverage=float(cum[k - 1]),
        tau=tree.tau, p=float(p), tree=tree, tree_ref=tree_digest(tree) if with_ref else None,
    )


def coverage_estimate(hpd, test, t_alpha: float = 1.0, alpha: Optional[float] = None) -> CoverageReport:
    """Fraction of test samples inside the set, with the null-variance standard error."""
    X = test.values if isinstance(test, SampleMatrix) else np.atleast_2d(np.asarray(test, dtype=np.float64))
    m = X.shape[0]
    if m == 0:
        raise ValueError("empty test set")
    if t_alpha < 1.0:
        raise ValueError(f"t_alpha must be >= 1, got {t_alpha}")
    if alpha is None:
        alpha = hpd.alpha_target
    alpha_hat = float(np.count_nonzero(hpd.contains(X)) / m)
    m_eff = m / t_alpha
    return CoverageReport(alpha_hat, m_eff, math.sqrt(alpha * (1.0 - alpha) / m_eff), m)


def write_membership_csv(path, X, inside) -> None:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([f"x{i + 1}" for i in range(X.shape[1])] + ["inside"])
        for row, flag in zip(X, inside):
            w.writerow([repr(float(v)) for v in row] + [int(flag)])


def hpd_to_json(hpd: HpdSet, include_tree: bool = False) -> str:
    return json.dumps(hpd.to_dict(include_tree))
