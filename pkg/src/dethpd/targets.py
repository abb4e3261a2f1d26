"""Seeded samplers and unnormalised densities for the synthetic test targets."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import log_ndtr

from .samples import SampleMatrix

BANANA_PARAMS = {"A": 0.5, "B": 0.0, "C1": 3.0, "C2": 3.0}
DONUT_PARAMS = {"radii": [3.0, 9.0], "sd": 0.5, "weights": [0.5, 0.5]}
SKEW_BETA = np.array([-5.0, -4.0, -3.0, -2.0, -1.0, 1.0, 2.0, 3.0, 4.0, 5.0])


def gauss_q(X) -> np.ndarray:
    X = np.atleast_2d(X)
    return np.exp(-0.5 * np.einsum("ij,ij->i", X, X))


def gauss_sample(n: int, rng, d: int = 2) -> np.ndarray:
    return rng.standard_normal((n, d))


def banana_logq(X, A=0.5, B=0.0, C1=3.0, C2=3.0) -> np.ndarray:
    x, y = np.atleast_2d(X).T
    return -0.5 * (A * x**2 * y**2 + x**2 + y**2 - 2 * B * x * y - 2 * C1 * x - 2 * C2 * y)


def banana_q(X, **params) -> np.ndarray:
    return np.exp(banana_logq(X, **{**BANANA_PARAMS, **params}))


def banana_sample(n: int, rng, A=0.5, B=0.0, C1=3.0, C2=3.0, grid: int = 200001) -> np.ndarray:
    """Exact-in-the-limit sampler: y from its marginal by inverse CDF on a fine grid, then x | y.

    Given y the density is Gaussian in x with precision A y^2 + 1 and mean
    (B y + C1) / (A y^2 + 1).
    """
    ys = np.linspace(-12.0, 18.0, grid)
    prec = A * ys**2 + 1.0
    logg = -0.5 * np.log(prec) - 0.5 * (ys**2 - 2 * C2 * ys) + (B * ys + C1) ** 2 / (2 * prec)
    w = np.exp(logg - logg.max())
    cdf = np.cumsum(w)
    cdf /= cdf[-1]
    u = rng.random(n)
    i = np.searchsorted(cdf, u)
    i = np.clip(i, 1, grid - 1)
    # linear interpolation inside the grid cell
    c0, c1 = cdf[i - 1], cdf[i]
    frac = np.where(c1 > c0, (u - c0) / np.where(c1 > c0, c1 - c0, 1.0), 0.5)
    y = ys[i - 1] + frac * (ys[i] - ys[i - 1])
    p = A * y**2 + 1.0
    x = (B * y + C1) / p + rng.standard_normal(n) / np.sqrt(p)
    return np.column_stack([x, y])


def _npdf(z):
    return np.exp(-0.5 * z * z) / math.sqrt(2 * math.pi)


def donut_q(X, radii=(3.0, 9.0), sd=0.5, weights=(0.5, 0.5)) -> np.ndarray:
    """Density in the plane of a radial mixture with uniform angle (up to 1/2pi)."""
    X = np.atleast_2d(X)
    r = np.hypot(X[:, 0], X[:, 1])
    radial = sum(w * _npdf((r - c) / sd) / sd for c, w in zip(radii, weights))
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(r > 0, radial / r, 0.0)


def donut_sample(n: int, rng, radii=(3.0, 9.0), sd=0.5, weights=(0.5, 0.5)) -> np.ndarray:
    comp = rng.choice(len(radii), size=n, p=np.asarray(weights) / np.sum(weights))
    r = np.asarray(radii)[comp] + sd * rng.standard_normal(n)
    theta = rng.uniform(0.0, 2 * math.pi, n)
    return np.column_stack([r * np.cos(theta), r * np.sin(theta)])


def skewnorm_logq(X, beta=SKEW_BETA) -> np.ndarray:
    X = np.atleast_2d(X)
    return -0.5 * np.einsum("ij,ij->i", X, X) + log_ndtr(X @ beta)


def skewnorm_q(X, beta=SKEW_BETA) -> np.ndarray:
    return np.exp(skewnorm_logq(X, beta))


def skewnorm_sample(n: int, rng, beta=SKEW_BETA) -> np.ndarray:
    """Density 2 phi(x) Phi(beta.x): keep z with probability Phi(beta.z), else reflect."""
    beta = np.asarray(beta, dtype=np.float64)
    z = rng.standard_normal((n, beta.shape[0]))
    keep = np.log(rng.random(n)) < log_ndtr(z @ beta)
    return np.where(keep[:, None], z, -z)


@dataclass(frozen=True)
class Target:
    name: str
    d: int
    sample: object
    q: object
    params: dict = field(default_factory=dict)

    def draw(self, n: int, seed: int = 0, with_q: bool = True) -> SampleMatrix:
        if n < 1:
            raise ValueError("n must be positive")
        X = self.sample(n, np.random.default_rng(seed))
        return SampleMatrix(X, self.q(X) if with_q else None)


def get_target(name: str, d: int = 2) -> Target:
    if name == "gauss":
        return Target("gauss", d, lambda n, rng: gauss_sample(n, rng, d), gauss_q, {"d": d})
    if name == "banana":
        return Target("banana", 2, banana_sample, banana_q, dict(BANANA_PARAMS))
    if name == "donut":
        return Target("donut", 2, donut_sample, donut_q, dict(DONUT_PARAMS))
    if name == "skewnorm":
        return Target("skewnorm", SKEW_BETA.shape[0], skewnorm_sample, skewnorm_q, {"beta": SKEW_BETA.tolist()})
    raise ValueError(f"unknown target {name!r}; choose gauss, banana, donut or skewnorm")


TARGETS = ("gauss", "banana", "donut", "skewnorm")
