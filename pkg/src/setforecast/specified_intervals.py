"""Scores and identification functions for intervals pinned down by a rule.

Covers quantile-bounded intervals, intervals with a fixed lower endpoint or
midpoint, intervals anchored at an identifiable functional, the
function-valued identification of shortest intervals, and the
infinity-bearing score for the shortest interval at full coverage.

Scores are vectorized over the observation ``y``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .dist_core import Distribution, prob_closed_interval
from .interval_family import Interval
from .quadrature import expectation

Ident = Callable[[float, np.ndarray], np.ndarray]

_TRANSFORMS = {"atan": np.arctan, "identity": lambda t: np.asarray(t, dtype=float)}


def _out(v):
    v = np.asarray(v, dtype=float)
    return float(v) if v.ndim == 0 else v


@dataclass(frozen=True)
class PinballSpec:
    """Level and increasing transform of a generalized pinball score.

    ``g="identity"`` gives the classical pinball loss, which has finite
    expectation only under a first-moment condition; the caller must declare
    it with ``finite_moments=True``.  ``g="atan"`` is bounded.
    """

    level: float
    g: str = "atan"
    finite_moments: bool = False

    def __post_init__(self):
        if not 0.0 < self.level < 1.0:
            raise ValueError(f"pinball level {self.level} outside (0, 1)")
        if self.g not in _TRANSFORMS:
            raise ValueError(f"unknown transform {self.g!r}")
        if self.g == "identity" and not self.finite_moments:
            raise ValueError("identity transform requires finite_moments=True")

    @property
    def transform(self):
        return _TRANSFORMS[self.g]


def pinball(spec: PinballSpec, x: float, y):
    """(1{y <= x} - level)(g(x) - g(y))."""
    y = np.asarray(y, dtype=float)
    g = spec.transform
    with np.errstate(invalid="ignore"):
        gx, gy = g(np.asarray(x, dtype=float)), g(y)
        diff = np.where(gx == gy, 0.0, gx - gy)
    return _out(((y <= x).astype(float) - spec.level) * diff)


def _check_qi(alpha: float, beta: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha={alpha} outside (0, 1)")
    if not 0.0 < beta < 1.0 - alpha:
        raise ValueError(f"beta={beta} must lie in (0, 1 - alpha)")


def qi_score(x: Interval, y, alpha: float, beta: float,
             specs: tuple[str, str] | None = None, finite_moments: bool = False):
    """Sum of pinball scores for the beta- and (alpha + beta)-quantiles."""
    _check_qi(alpha, beta)
    g1, g2 = specs or ("atan", "atan")
    lo = PinballSpec(beta, g1, finite_moments)
    hi = PinballSpec(alpha + beta, g2, finite_moments)
    return _out(np.asarray(pinball(lo, x.lo, y)) + np.asarray(pinball(hi, x.hi, y)))


def qi_ident(x: Interval, y, alpha: float, beta: float):
    """(1{y <= x.lo} - beta, 1{y <= x.hi} - alpha - beta)."""
    _check_qi(alpha, beta)
    y = np.asarray(y, dtype=float)
    return _out((y <= x.lo).astype(float) - beta), _out((y <= x.hi).astype(float) - alpha - beta)


# -- fixed endpoint or midpoint ----------------------------------------

def tail_weight(points: Sequence[float], weights: Sequence[float] | None = None):
    """h(t) = mu([t, inf)) for a finite point measure on the real line."""
    pts = np.asarray(points, dtype=float)
    order = np.argsort(pts, kind="stable")
    pts = pts[order]
    w = np.ones(len(pts)) if weights is None else np.asarray(weights, dtype=float)[order]
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    # suffix sums; tail[k] = mass of pts[k:]
    tail = np.concatenate((np.cumsum(w[::-1])[::-1], [0.0]))

    def h(t):
        t = np.asarray(t, dtype=float)
        return _out(tail[np.searchsorted(pts, t, side="left")])

    return h


def fixed_left_score(x: float, y, alpha: float, a: float, h: Callable):
    """Score for the upper endpoint of the shortest alpha-interval starting at ``a``.

    1{y >= a}(1{y <= x} - alpha)(h(y) - h(x)) + 1{y < a} alpha h(x), with
    ``h`` decreasing and vanishing at +inf.
    """
    if x < a:
        raise ValueError(f"x={x} lies below the fixed endpoint a={a}")
    y = np.asarray(y, dtype=float)
    hx = float(h(x)) if math.isfinite(x) else 0.0
    hy = np.asarray(h(y), dtype=float)
    above = y >= a
    main = ((y <= x).astype(float) - alpha) * (hy - hx)
    return _out(np.where(above, main, alpha * hx))


def fixed_right_score(x: float, y, alpha: float, b: float, h: Callable):
    """Reflection of ``fixed_left_score`` for a fixed upper endpoint ``b``.

    ``x <= b`` is the reported lower endpoint; ``h`` is a decreasing tail
    weight on the reflected line ``t -> -t``.
    """
    if x > b:
        raise ValueError(f"x={x} lies above the fixed endpoint b={b}")
    return fixed_left_score(-x, -np.asarray(y, dtype=float), alpha, -b, h)


def fixed_mid_score(x: float, y, m: float, alpha: float, g: Callable | None = None):
    """(1{|y - m| <= x} - alpha)(g(x) - g(|y - m|)) for a half-width ``x >= 0``."""
    if x < 0:
        raise ValueError(f"half-width {x} is negative")
    g = g or _TRANSFORMS["identity"]
    r = np.abs(np.asarray(y, dtype=float) - m)
    return _out(((r <= x).astype(float) - alpha) * (np.asarray(g(x)) - np.asarray(g(r))))


# -- endpoint functionals ----------------------------------------------

def mean_ident(x: float, y):
    return _out(x - np.asarray(y, dtype=float))


def quantile_ident(beta: float) -> Ident:
    def v(x, y):
        return _out((np.asarray(y, dtype=float) <= x).astype(float) - beta)
    return v


def expectile_ident(tau: float) -> Ident:
    def v(x, y):
        y = np.asarray(y, dtype=float)
        return _out(np.abs((y <= x).astype(float) - tau) * (x - y))
    return v


def functional_left_ident(z: Sequence[float], y, alpha: float, v_l: Ident = mean_ident):
    """(V_l(z1, y), 1{y in [z1, z1 + 2 z2]} - alpha).

    ``z2`` is the half-length, so the interval is ``[z1, z1 + 2 z2]``.
    """
    z1, z2 = z
    if z2 < 0:
        raise ValueError("half-length must be nonnegative")
    y = np.asarray(y, dtype=float)
    inside = ((y >= z1) & (y <= z1 + 2.0 * z2)).astype(float)
    return v_l(z1, y), _out(inside - alpha)


def functional_mid_ident(z: Sequence[float], y, alpha: float, v_m: Ident = mean_ident):
    """(V_m(z1, y), 1{y in [z1 - z2, z1 + z2]} - alpha)."""
    z1, z2 = z
    if z2 < 0:
        raise ValueError("half-length must be nonnegative")
    y = np.asarray(y, dtype=float)
    inside = ((y >= z1 - z2) & (y <= z1 + z2)).astype(float)
    return v_m(z1, y), _out(inside - alpha)


def expected_pair(dist: Distribution, ident: Callable, kinks: Sequence[float] = (),
                  tol: float = 1e-12) -> tuple[float, float]:
    """Expectation of a two-component identification function under ``dist``."""
    first = expectation(dist, lambda y: np.asarray(ident(y)[0], dtype=float), kinks, tol)
    second = expectation(dist, lambda y: np.asarray(ident(y)[1], dtype=float), kinks, tol)
    return first, second


# -- shortest intervals ------------------------------------------------

def si_selective_ident(x: Interval, dist: Distribution, alpha: float,
                       a_grid: Sequence[float]) -> tuple[np.ndarray, float]:
    """Coverage of the shifted intervals [x.lo + a, x.hi + a] minus alpha.

    ``x`` is a shortest alpha-interval of ``dist`` exactly when all values
    are <= 0 and the value at shift 0 vanishes.
    """
    a = np.asarray(a_grid, dtype=float)
    vals = np.array([prob_closed_interval(dist, x.lo + s, x.hi + s) - alpha for s in a])
    return vals, prob_closed_interval(dist, x.lo, x.hi) - alpha


def si1_score(x: Interval, y, g: Callable = np.arctan):
    """+inf if y lies outside x, otherwise g(x.hi) - g(x.lo)."""
    y = np.asarray(y, dtype=float)
    width = float(g(x.hi)) - float(g(x.lo))
    return _out(np.where((y >= x.lo) & (y <= x.hi), width, math.inf))


def si1_expected(x: Interval, dist: Distribution, g: Callable = np.arctan) -> float:
    """Expected ``si1_score``: finite only when x covers the support of ``dist``."""
    lo, hi = dist.support()
    if x.lo > lo or x.hi < hi:
        return math.inf
    return float(g(x.hi)) - float(g(x.lo))
