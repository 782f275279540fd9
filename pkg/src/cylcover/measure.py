"""Hitting measures of balls under the invariant line measure.

All values use the normalisation in which the lines hitting a unit ball have
measure 1. The central quantity is the measure of lines hitting both
``B(o, 1)`` and ``B(r e_1, 1)``: for a line with direction ``l`` the two balls
project to unit (d-1)-balls whose centres are ``r * sqrt(1 - l_1**2)`` apart,
and the normalised lens volume is a regularized incomplete beta function.
Averaging over ``l_1`` (one coordinate of a uniform point on the sphere)
reduces the measure to a one-dimensional integral.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, special

from . import UsageError
from .lineproc import Window, keyed_rng, sample_lines, window_intensity

QUAD_TOL = 1e-11


@dataclass(frozen=True)
class MeasureValue:
    value: float
    method: str  # "closed_form" | "quadrature" | "monte_carlo"
    abs_error: float = 0.0
    n_samples: int = 0

    def __post_init__(self):
        if self.value < 0 or self.abs_error < 0:
            raise ValueError("measure values and errors are nonnegative")
        if self.method == "closed_form" and self.abs_error != 0:
            raise ValueError("closed-form values carry no error")

    def to_dict(self):
        out = {"value": self.value, "method": self.method, "abs_error": self.abs_error}
        if self.method == "monte_carlo":
            out["n_samples"] = self.n_samples
        return out


@dataclass(frozen=True)
class DimConstants:
    d: int
    C_d: float
    C_tilde_d: float
    kappa_d: float
    D_d: float


def _check_d(d):
    if int(d) != d or d < 2:
        raise UsageError("dimension d must be an integer >= 2")
    return int(d)


def _check_rho(rho):
    if not 0.0 <= rho < 1.0:
        raise UsageError("rho must lie in [0, 1)")


def gamma(rho: float, d: int) -> float:
    """Measure of the lines hitting a ball of radius ``1 - rho``."""
    _check_rho(rho)
    return (1.0 - rho) ** (_check_d(d) - 1)


def reg_inc_beta(x: float, a: float, b: float) -> float:
    if not 0.0 <= x <= 1.0:
        raise UsageError("x must lie in [0, 1]")
    if a <= 0 or b <= 0:
        raise UsageError("beta parameters must be positive")
    return float(special.betainc(a, b, x))


def dim_constants(d: int) -> DimConstants:
    d = _check_d(d)
    c = 1.0 if d == 2 else math.sqrt(1.0 - 4.0 ** (-1.0 / (d - 2)))
    kappa = math.pi ** (d / 2) / math.gamma(d / 2 + 1)
    return DimConstants(d, c, c / (12 * (1 + c)), kappa, float(special.beta(d / 2, 0.5)))


@lru_cache(maxsize=4096)
def _pair_hit(r: float, d: int):
    if r == 0:
        return 1.0, 0.0
    # l_1 = cos(theta); the law of theta on [0, pi/2] (folded) has density
    # proportional to sin(theta)**(d-2)
    norm = math.sqrt(math.pi) * math.gamma((d - 1) / 2) / (2 * math.gamma(d / 2))
    upper = math.pi / 2 if r <= 2 else math.asin(2.0 / r)

    def f(th):
        s = math.sin(th)
        x = 1.0 - (r * s) ** 2 / 4.0
        return s ** (d - 2) * special.betainc(d / 2, 0.5, min(max(x, 0.0), 1.0))

    val, err = integrate.quad(f, 0.0, upper, epsabs=QUAD_TOL, epsrel=QUAD_TOL, limit=200)
    return val / norm, err / norm


def pair_hit_measure(r: float, d: int) -> MeasureValue:
    """Measure of lines hitting both ``B(o, 1)`` and ``B(r e_1, 1)``."""
    d = _check_d(d)
    if r < 0:
        raise UsageError("distance r must be nonnegative")
    if r == 0:
        return MeasureValue(1.0, "closed_form")
    v, e = _pair_hit(float(r), d)
    return MeasureValue(max(min(v, 1.0), 0.0), "quadrature", e)


def pair_union_measure(r: float, d: int, rho: float = 0.0) -> MeasureValue:
    """Measure of lines hitting ``B(x, 1-rho)`` or ``B(y, 1-rho)`` with ``|x-y| = r``."""
    g = gamma(rho, d)
    if r < 0:
        raise UsageError("distance r must be nonnegative")
    inter = pair_hit_measure(r / (1.0 - rho), d)
    return MeasureValue(g * (2.0 - inter.value), inter.method, g * inter.abs_error)


def _check_ratio_args(rho, k):
    if not 0.0 < rho < 1.0:
        raise UsageError("rho must lie in (0, 1)")
    if int(k) != k or k < 0:
        raise UsageError("k must be a nonnegative integer")


def beta_ratio(rho: float, k: int, d: int) -> float:
    _check_ratio_args(rho, k)
    return 2.0 - pair_hit_measure(2 ** k * rho / (1.0 - rho), d).value


def beta_ratio_via_union(rho: float, k: int, d: int) -> float:
    """Same quantity as :func:`beta_ratio` through the (1-rho)-ball union."""
    _check_ratio_args(rho, k)
    return pair_union_measure(2 ** k * rho, d, rho).value / gamma(rho, d)


def alpha_ratio(rho: float, k: int, d: int) -> float:
    _check_ratio_args(rho, k)
    return 2.0 - pair_hit_measure(2 ** k * rho, d).value


def lines_hit_ball(dirs, offsets, center, radius):
    """Boolean mask of lines passing within ``radius`` of ``center``."""
    w = np.asarray(center, dtype=float) - offsets
    along = np.sum(w * dirs, axis=1)
    return np.sum(w * w, axis=1) - along * along <= radius * radius


def mc_pair_oracle(r: float, d: int, n_samples: int, seed: int = 0,
                   batch: int = 200_000) -> MeasureValue:
    """Monte Carlo estimate of :func:`pair_hit_measure` by hit counting.

    Lines are drawn from the restricted law on ``B(midpoint, r/2 + 1)``, which
    contains both unit balls, so ``intensity * fraction`` is unbiased.
    """
    d = _check_d(d)
    if n_samples < 1:
        raise UsageError("n_samples must be >= 1")
    a = np.zeros(d)
    b = np.zeros(d)
    b[0] = r
    win = Window((a + b) / 2, r / 2 + 1.0)
    rng = keyed_rng(seed, 0, f"mc_pair:{r}:{d}")
    hits = 0
    left = n_samples
    while left:
        m = min(batch, left)
        dirs, offs = sample_lines(win, rng, m)
        hits += int(np.count_nonzero(lines_hit_ball(dirs, offs, a, 1.0)
                                     & lines_hit_ball(dirs, offs, b, 1.0)))
        left -= m
    p = hits / n_samples
    lam = window_intensity(win)
    se = lam * math.sqrt(max(p * (1 - p), 0.0) / n_samples)
    return MeasureValue(lam * p, "monte_carlo", se, n_samples)


def pair_hit_closed_form_2d(r: float) -> float:
    """Planar closed form (Cauchy-Crofton): used as an extra test oracle.

    Overlapping discs: ``1 - r/pi``. Disjoint discs: crossed-belt length
    minus hull perimeter, over ``2 pi``.
    """
    if r <= 2:
        return 1.0 - r / math.pi
    belt = 2 * math.sqrt(r * r - 4) + 2 * (math.pi + 2 * math.asin(2 / r))
    return (belt - (2 * math.pi + 2 * r)) / (2 * math.pi)
