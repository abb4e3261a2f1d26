"""D*-partition density estimation trees.

Cells are half-open ``[u, v)`` except on the upper faces of the root box,
which are closed. Splits sit on the m_g-grid of the cell being split and a
cell is split while it holds more than two points and its lattice star
discrepancy exceeds ``tau * sqrt(N) / n_k``.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .samples import HyperRect, SampleMatrix, affine_to_unit


@dataclass(frozen=True)
class DetConfig:
    m_g: int = 64
    budget: int = 4096
    starts: int = 16
    seed: int = 0
    min_rel_width: float = 1e-12
    standardize: bool = True  # build on unit-cube coordinates, map cells back
    backend: Optional[str] = None

    def __post_init__(self):
        if self.m_g < 2:
            raise ValueError("m_g must be at least 2")
        if self.budget < self.m_g + 1:
            raise ValueError(f"budget must allow one coordinate sweep ({self.m_g + 1} corners)")
        if self.starts < 1:
            raise ValueError("starts must be positive")

    def snapshot(self) -> dict:
        snap = asdict(self)
        snap.pop("backend")
        return snap


@dataclass(frozen=True)
class LeafCell:
    leaf_id: int
    cell: HyperRect
    count: int
    log_volume: float


@dataclass
class PartitionTree:
    """Binary partition of ``rect`` with per-leaf sample counts.

    Node arrays describe the internal structure (``feature < 0`` marks a
    leaf); ``lower``/``upper``/``counts`` are per-leaf, indexed by leaf id.
    """

    rect: HyperRect
    tau: float
    N: int
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    node_leaf: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    counts: np.ndarray
    config: dict = field(default_factory=dict)
    n_total: Optional[int] = None

    @property
    def n_leaves(self) -> int:
        return self.counts.shape[0]

    @property
    def d(self) -> int:
        return self.rect.d

    @property
    def log_volumes(self) -> np.ndarray:
        return np.sum(np.log(self.upper - self.lower), axis=1)

    @property
    def log_densities(self) -> np.ndarray:
        """log(n_k / N / |cell|); -inf for empty leaves."""
        with np.errstate(divide="ignore"):
            return np.log(self.counts) - math.log(self.N) - self.log_volumes

    def leaves(self) -> list[LeafCell]:
        lv = self.log_volumes
        return [LeafCell(k, HyperRect(self.lower[k], self.upper[k]), int(self.counts[k]), float(lv[k]))
                for k in range(self.n_leaves)]

    def leaf_of(self, X, backend=None) -> np.ndarray:
        """Leaf id containing each row of ``X`` (-1 outside the root box)."""
        X = np.ascontiguousarray(np.atleast_2d(np.asarray(X, dtype=np.float64)))
        if X.shape[1] != self.d:
            raise ValueError(f"points have {X.shape[1]} columns, tree has d={self.d}")
        return kernels.get(backend).descend(X, self.feature, self.threshold, self.left, self.right,
                                            self.node_leaf, self.rect.lower, self.rect.upper)

    def to_dict(self) -> dict:
        splits = [
            {"node": int(i), "dim": int(self.feature[i]), "coord": float(self.threshold[i]),
             "left": int(self.left[i]), "right": int(self.right[i])}
            for i in np.flatnonzero(self.feature >= 0)
        ]
        leaf_nodes = np.flatnonzero(self.feature < 0)
        leaf_nodes = leaf_nodes[np.argsort(self.node_leaf[leaf_nodes])]
        leaves = [
            {"id": k, "node": int(nd), "lower": self.lower[k].tolist(), "upper": self.upper[k].tolist(),
             "count": int(self.counts[k])}
            for k, nd in enumerate(leaf_nodes)
        ]
        return {"rect": self.rect.to_dict(), "tau": self.tau, "N": self.N, "n_total": self.n_total,
                "config": self.config, "leaves": leaves, "splits": splits}

    @classmethod
    def from_dict(cls, data: dict) -> "PartitionTree":
        n_nodes = len(data["splits"]) + len(data["leaves"])
        feature = np.full(n_nodes, -1, dtype=np.int64)
        threshold = np.zeros(n_nodes)
        left = np.full(n_nodes, -1, dtype=np.int64)
        right = np.full(n_nodes, -1, dtype=np.int64)
        node_leaf = np.full(n_nodes, -1, dtype=np.int64)
        for s in data["splits"]:
            i = s["node"]
            feature[i], threshold[i], left[i], right[i] = s["dim"], s["coord"], s["left"], s["right"]
        leaves = sorted(data["leaves"], key=lambda r: r["id"])
        for leaf in leaves:
            node_leaf[leaf["node"]] = leaf["id"]
        return cls(
            rect=HyperRect.from_dict(data["rect"]), tau=float(data["tau"]), N=int(data["N"]),
            feature=feature, threshold=threshold, left=left, right=right, node_leaf=node_leaf,
            lower=np.array([r["lower"] for r in leaves], dtype=np.float64),
            upper=np.array([r["upper"] for r in leaves], dtype=np.float64),
            counts=np.array([r["count"] for r in leaves], dtype=np.int64),
            config=dict(data.get("config", {})), n_total=data.get("n_total"),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "PartitionTree":
        return cls.from_dict(json.loads(text))


def _points_inside(train, rect: HyperRect) -> np.ndarray:
    X = train.values if isinstance(train, SampleMatrix) else np.atleast_2d(np.asarray(train, dtype=np.float64))
    if X.shape[1] != rect.d:
        raise ValueError(f"samples have d={X.shape[1]}, box has d={rect.d}")
    return np.ascontiguousarray(X[rect.contains(X)])


def build_det(train, rect: HyperRect, tau: float, cfg: DetConfig = DetConfig()) -> PartitionTree:
    """Build the density estimation tree for the samples inside ``rect``.

    Leaves are processed breadth-first; a leaf that fails the split test is
    final. Splits whose thinner side would fall below ``min_rel_width`` of the
    root width leave the cell unsplit.
    """
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau}")
    n_total = train.n if isinstance(train, SampleMatrix) else len(train)
    X = _points_inside(train, rect)
    N = X.shape[0]
    if N == 0:
        raise ValueError("no training samples inside the truncation box")
    d = rect.d
    m = cfg.m_g
    kern = kernels.get(cfg.backend)

    if cfg.standardize:
        W = np.ascontiguousarray(affine_to_unit(X, rect))
        root_lo, root_hi = np.zeros(d), np.ones(d)
    else:
        W = X
        root_lo, root_hi = rect.lower.copy(), rect.upper.copy()
    root_w = root_hi - root_lo
    sqrt_n = math.sqrt(N)

    feature, threshold, left, right = [-1], [0.0], [-1], [-1]
    lows, highs, counts = [root_lo], [root_hi], [N]
    keys = [kern.splitmix64(cfg.seed & 0xFFFFFFFFFFFFFFFF)[1]]
    frontier = [(0, np.arange(N, dtype=np.int64))]
    while frontier:
        nxt = []
        for node, idx in frontier:
            n_k = idx.shape[0]
            if n_k <= 2:
                continue
            lo, hi = lows[node], highs[node]
            limit = tau * sqrt_n / n_k
            dstar, _, dim, l, _ = kern.scan_leaf(W, idx, lo, hi, m, cfg.budget, cfg.starts, keys[node], limit)
            if not dstar > limit:
                continue
            cut = lo[dim] + (hi[dim] - lo[dim]) * (l / m)
            if min(cut - lo[dim], hi[dim] - cut) < cfg.min_rel_width * root_w[dim]:
                continue
            idx_l, idx_r = kern.split_points(W, idx, lo, hi, m, dim, l)
            feature[node], threshold[node] = dim, cut
            for side, child_idx in ((0, idx_l), (1, idx_r)):
                c_lo, c_hi = lo.copy(), hi.copy()
                if side == 0:
                    c_hi[dim] = cut
                else:
                    c_lo[dim] = cut
                child = len(feature)
                feature.append(-1)
                threshold.append(0.0)
                left.append(-1)
                right.append(-1)
                lows.append(c_lo)
                highs.append(c_hi)
                counts.append(child_idx.shape[0])
                keys.append(kern.child_key(keys[node], side))
                if side == 0:
                    left[node] = child
                else:
                    right[node] = child
                nxt.append((child, child_idx))
        frontier = nxt

    feature = np.asarray(feature, dtype=np.int64)
    threshold = np.asarray(threshold, dtype=np.float64)
    lows = np.asarray(lows)
    highs = np.asarray(highs)
    if cfg.standardize:
        width = rect.upper - rect.lower
        internal = feature >= 0
        threshold[internal] = rect.lower[feature[internal]] + threshold[internal] * width[feature[internal]]
        lows = np.where(lows == 0.0, rect.lower, rect.lower + lows * width)
        highs = np.where(highs == 1.0, rect.upper, rect.lower + highs * width)
    leaf_nodes = np.flatnonzero(feature < 0)
    node_leaf = np.full(feature.shape[0], -1, dtype=np.int64)
    node_leaf[leaf_nodes] = np.arange(leaf_nodes.shape[0])
    return PartitionTree(
        rect=rect, tau=float(tau), N=N, feature=feature, threshold=threshold,
        left=np.asarray(left, dtype=np.int64), right=np.asarray(right, dtype=np.int64),
        node_leaf=node_leaf, lower=np.ascontiguousarray(lows[leaf_nodes]),
        upper=np.ascontiguousarray(highs[leaf_nodes]),
        counts=np.asarray(counts, dtype=np.int64)[leaf_nodes],
        config=cfg.snapshot(), n_total=n_total,
    )


def density_eval(tree: PartitionTree, x) -> np.ndarray | float:
    """Piecewise-constant density at ``x`` (vector or rows); 0 outside the root box."""
    x = np.asarray(x, dtype=np.float64)
    leaf = tree.leaf_of(x)
    out = np.zeros(leaf.shape[0])
    hit = leaf >= 0
    out[hit] = np.exp(tree.log_densities[leaf[hit]])
    return float(out[0]) if x.ndim == 1 else out


def mass_on_rect(tree: PartitionTree, query: HyperRect) -> float:
    """Estimated probability of ``query``: sum of n_k/N times the covered fraction of each leaf."""
    lo = np.maximum(tree.lower, query.lower)
    hi = np.minimum(tree.upper, query.upper)
    frac = np.prod(np.clip(hi - lo, 0.0, None) / (tree.upper - tree.lower), axis=1)
    return float(np.sum(tree.counts * frac) / tree.N)


def partition_equivalence_check(train, rect: HyperRect, tau: float, cfg: DetConfig = DetConfig(),
                                rtol: float = 1e-9) -> bool:
    """Build directly on ``rect`` and via the unit cube; True when the partitions agree."""
    raw = build_det(train, rect, tau, DetConfig(**{**asdict(cfg), "standardize": False}))
    unit = build_det(train, rect, tau, DetConfig(**{**asdict(cfg), "standardize": True}))
    if raw.n_leaves != unit.n_leaves or not np.array_equal(raw.counts, unit.counts):
        return False
    scale = rect.widths
    return bool(np.all(np.abs(raw.lower - unit.lower) <= rtol * scale)
                and np.all(np.abs(raw.upper - unit.upper) <= rtol * scale))
