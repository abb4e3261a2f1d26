"""Lattice approximation of the star discrepancy and the max-gap split rule."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels


@dataclass(frozen=True)
class GapTable:
    m_g: int
    h: np.ndarray  # (m_g - 1) x d, row l-1 holds the gap at grid line l / m_g


@dataclass(frozen=True)
class DiscrepancyEstimate:
    value: float
    budget_used: int
    method: str


def _unit_points(points) -> np.ndarray:
    pts = np.ascontiguousarray(np.atleast_2d(np.asarray(points, dtype=np.float64)))
    if pts.shape[0] == 0:
        raise ValueError("empty point set")
    if np.any(~np.isfinite(pts)) or np.any((pts < 0.0) | (pts > 1.0)):
        raise ValueError("point coordinates must lie in [0, 1]")
    return pts


def search_method(d: int, m_g: int, budget: int) -> str:
    return "coarse-grid" if m_g**d <= budget else "grid-plus-ascent"


def star_discrepancy(points, budget: int = 4096, m_g: int = 64, starts: int = 16, seed: int = 0,
                     backend=None) -> DiscrepancyEstimate:
    """Lower bound on the star discrepancy of ``points`` in [0, 1]^d.

    Anchored boxes [0, a) and [0, a] are evaluated at corners a on the
    per-dimension grid {l / m_g}. All corners are visited when m_g**d <= budget;
    otherwise a seeded multi-start coordinate ascent spends at most ``budget``
    corner evaluations.

    For a 1-d column vector pass shape (n, 1); a flat sequence is read as one point.
    """
    pts = _unit_points(points)
    if m_g < 2:
        raise ValueError("m_g must be at least 2")
    d = pts.shape[1]
    if m_g**d > budget and budget < m_g + 1:
        raise ValueError(f"budget {budget} is below one coordinate sweep ({m_g + 1} corners)")
    kern = kernels.get(backend)
    key = kern.splitmix64(seed & 0xFFFFFFFFFFFFFFFF)[1]
    value, evals, *_ = kern.scan_leaf(pts, np.arange(pts.shape[0]), np.zeros(d), np.ones(d),
                                      m_g, budget, starts, key, np.inf)
    return DiscrepancyEstimate(float(value), int(evals), search_method(d, m_g, budget))


def gap_table(points, m_g: int = 64, backend=None) -> GapTable:
    pts = _unit_points(points)
    if m_g < 2:
        raise ValueError("m_g must be at least 2")
    d = pts.shape[1]
    h = kernels.get(backend).gap_table(pts, np.arange(pts.shape[0]), np.zeros(d), np.ones(d), m_g)
    return GapTable(m_g, h)


def max_gap(points, m_g: int = 64, backend=None) -> tuple[int, int, float]:
    """Largest gap ``(dim, l, h)``: split at l / m_g along ``dim`` (0-based).

    Ties go to the smallest dimension, then the smallest grid index.
    """
    h = gap_table(points, m_g, backend).h
    flat = int(np.argmax(h.T))  # row-major over (dim, l)
    dim, l0 = divmod(flat, m_g - 1)
    return dim, l0 + 1, float(h[l0, dim])
