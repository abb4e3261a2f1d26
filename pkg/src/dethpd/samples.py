"""Sample ingestion, truncation boxes and the affine map to the unit cube."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np


class DataError(ValueError):
    """Malformed sample data; messages carry row/column positions (1-based)."""


@dataclass(frozen=True)
class SampleMatrix:
    """n x d samples with optional unnormalised density values ``q``."""

    values: np.ndarray
    q_values: Optional[np.ndarray] = None

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        if values.ndim == 1:
            values = values.reshape(-1, 1)
        if values.ndim != 2 or values.shape[1] < 1:
            raise DataError("samples must be a 2-d array with at least one column")
        if not np.all(np.isfinite(values)):
            row, col = np.argwhere(~np.isfinite(values))[0]
            raise DataError(f"non-finite sample value at row {row + 1} col {col + 1}")
        object.__setattr__(self, "values", values)
        if self.q_values is not None:
            q = np.asarray(self.q_values, dtype=np.float64).ravel()
            if q.shape[0] != values.shape[0]:
                raise DataError(f"q_values has length {q.shape[0]}, expected {values.shape[0]}")
            if not np.all(np.isfinite(q)) or np.any(q < 0):
                raise DataError("q_values must be finite and non-negative")
            object.__setattr__(self, "q_values", q)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    def __len__(self):
        return self.n

    def take(self, rows) -> "SampleMatrix":
        q = None if self.q_values is None else self.q_values[rows]
        return SampleMatrix(self.values[rows], q)


@dataclass(frozen=True)
class HyperRect:
    """Closed axis-aligned box ``[lower, upper]``."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=np.float64).ravel().copy()
        hi = np.asarray(self.upper, dtype=np.float64).ravel().copy()
        if lo.shape != hi.shape or lo.size == 0:
            raise ValueError("lower and upper must be non-empty vectors of equal length")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValueError("box bounds must be finite")
        bad = np.flatnonzero(~(lo < hi))
        if bad.size:
            i = bad[0]
            raise ValueError(f"degenerate box in dimension {i + 1}: lower={lo[i]!r} upper={hi[i]!r}")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def d(self) -> int:
        return self.lower.shape[0]

    @property
    def widths(self) -> np.ndarray:
        return self.upper - self.lower

    @property
    def log_volume(self) -> float:
        return float(np.sum(np.log(self.widths)))

    @property
    def volume(self) -> float:
        return float(np.prod(self.widths))

    def contains(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        return np.all((X >= self.lower) & (X <= self.upper), axis=1)

    def to_dict(self) -> dict:
        return {"lower": self.lower.tolist(), "upper": self.upper.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "HyperRect":
        return cls(data["lower"], data["upper"])

    @classmethod
    def unit(cls, d: int) -> "HyperRect":
        return cls(np.zeros(d), np.ones(d))


@dataclass(frozen=True)
class TruncationReport:
    rect: HyperRect
    p_estimate: float
    n_inside: int
    mode: str

    def to_dict(self) -> dict:
        return {**self.rect.to_dict(), "p": self.p_estimate, "n_inside": self.n_inside, "mode": self.mode}


def _parse_float(cell: str, row: int, col: int) -> float:
    try:
        return float(cell)
    except ValueError:
        raise DataError(f"non-numeric value {cell.strip()!r} at row {row} col {col}") from None


def _is_header(cells) -> bool:
    for c in cells:
        try:
            float(c)
            return False
        except ValueError:
            pass
    return True


def load_samples(path, q_col: bool = False, fmt: str = "csv") -> SampleMatrix:
    """Read a comma-separated sample file, one sample per row.

    A first row with no numeric cell is treated as a header. With ``q_col`` the last
    column holds unnormalised density values. Row numbers in errors count
    data rows from 1 (the header is not counted).
    """
    if fmt != "csv":
        raise DataError(f"unsupported sample format {fmt!r}")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if rows and _is_header(rows[0]):
        rows = rows[1:]
    if not rows:
        raise DataError(f"{path}: no sample rows")
    width = len(rows[0])
    if q_col and width < 2:
        raise DataError(f"{path}: q column requested but rows have a single column")
    data = np.empty((len(rows), width))
    for r, cells in enumerate(rows, start=1):
        if len(cells) != width:
            raise DataError(f"{path}: row {r} has {len(cells)} columns, expected {width}")
        for c, cell in enumerate(cells, start=1):
            data[r - 1, c - 1] = _parse_float(cell, r, c)
    if not np.all(np.isfinite(data)):
        r, c = np.argwhere(~np.isfinite(data))[0]
        raise DataError(f"{path}: non-finite value at row {r + 1} col {c + 1}")
    if q_col:
        return SampleMatrix(data[:, :-1], data[:, -1])
    return SampleMatrix(data)


def write_samples(path, samples: SampleMatrix, names=None) -> None:
    d = samples.d
    header = list(names) if names else [f"x{i + 1}" for i in range(d)]
    if samples.q_values is not None and len(header) == d:
        header.append("q")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for j in range(samples.n):
            row = [repr(float(v)) for v in samples.values[j]]
            if samples.q_values is not None:
                row.append(repr(float(samples.q_values[j])))
            w.writerow(row)


def estimate_truncation(
    samples: SampleMatrix, mode: str = "bounding-box", p_target: Optional[float] = None
) -> TruncationReport:
    """Estimate the truncation box from the samples.

    ``bounding-box`` takes per-dimension min/max (coverage estimate 1 - 2/n).
    ``per-dim-quantile`` takes the k-th and (n+1-k)-th order statistics with
    k = floor(n (1 - p_target) / 2).
    """
    X = samples.values
    n = samples.n
    if n < 3:
        raise DataError(f"truncation needs at least 3 samples, got {n}")
    if mode == "bounding-box":
        lo, hi = X.min(axis=0), X.max(axis=0)
        p = 1.0 - 2.0 / n
    elif mode == "per-dim-quantile":
        if p_target is None or not 0.0 < p_target < 1.0:
            raise ValueError("per-dim-quantile mode needs p_target in (0, 1)")
        k = math.floor(n * (1.0 - p_target) / 2.0 + 1e-9)
        if k < 1:
            raise ValueError(f"floor(n(1-p)/2) = {k}; need more samples or smaller p_target")
        srt = np.sort(X, axis=0)
        lo, hi = srt[k - 1], srt[n - k]
        p = float(p_target)
    else:
        raise ValueError(f"unknown truncation mode {mode!r}")
    const = np.flatnonzero(~(lo < hi))
    if const.size:
        raise DataError(f"dimension {const[0] + 1} is constant (value {lo[const[0]]!r}); cannot truncate")
    rect = HyperRect(lo, hi)
    return TruncationReport(rect, p, int(np.count_nonzero(rect.contains(X))), mode)


def affine_to_unit(x, rect: HyperRect) -> np.ndarray:
    """Map points of ``rect`` onto [0, 1]^d; accepts a vector or an (n, d) array."""
    x = np.asarray(x, dtype=np.float64)
    pts = np.atleast_2d(x)
    bad = (pts < rect.lower) | (pts > rect.upper)
    if np.any(bad):
        r, i = np.argwhere(bad)[0]
        raise ValueError(f"point outside box in dimension {i + 1}: {pts[r, i]!r}")
    s = (pts - rect.lower) / (rect.upper - rect.lower)
    return s.reshape(x.shape)


def affine_from_unit(s, rect: HyperRect) -> np.ndarray:
    s = np.asarray(s, dtype=np.float64)
    return rect.lower + s * (rect.upper - rect.lower)


def split_train_test(
    samples: SampleMatrix, n_train: int, seed: int = 0, allow_empty: bool = False
) -> tuple[SampleMatrix, SampleMatrix]:
    """Seeded shuffle split into ``n_train`` training rows and the rest."""
    n = samples.n
    if n_train >= n:
        raise ValueError(f"n_train={n_train} must be smaller than n={n}")
    if n_train < 0 or (n_train == 0 and not allow_empty):
        raise ValueError("n_train must be positive (pass allow_empty=True for an empty train set)")
    perm = np.random.default_rng(seed).permutation(n)
    return samples.take(np.sort(perm[:n_train])), samples.take(np.sort(perm[n_train:]))
