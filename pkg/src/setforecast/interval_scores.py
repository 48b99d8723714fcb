"""Selective identification and exhaustive scoring of interval families.

A point measure ``mu`` on the half-plane ``U = {(u1, u2): u1 <= u2}`` turns a
family ``A`` into a number via its atoms; the normalized score

    S_mu(A, y) = (1 - alpha) mu(Q_y \\ A) + alpha mu(A \\ Q_y),

with ``Q_y = {u : u1 <= y <= u2}`` the family of intervals covering ``y``, is
consistent for the prediction-interval family.  Sums run over atoms in index
order with ``math.fsum``, so results do not depend on evaluation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dist_core import Distribution, prob_closed_interval
from .interval_family import Interval, IntervalFamily


@dataclass(frozen=True, eq=False)
class PointMeasure:
    """Finite measure on U given by weighted atoms ``points[k] = (u1, u2)``."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 2)
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if len(pts) != len(w):
            raise ValueError("points and weights differ in length")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite and nonnegative")
        if np.any(np.isnan(pts)) or np.any(pts[:, 0] > pts[:, 1]):
            raise ValueError("every atom must satisfy u1 <= u2")
        pts.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @classmethod
    def dirac(cls, u1: float, u2: float, weight: float = 1.0) -> "PointMeasure":
        return cls(np.array([[u1, u2]]), np.array([weight]))

    @classmethod
    def grid(cls, box: Sequence[float], res: int, total: float = 1.0) -> "PointMeasure":
        """Equal weights on a ``res x res`` product grid of ``box`` intersected with U.

        ``box`` is ``(x0, y0, x1, y1)``: u1 ranges over [x0, x1] and u2 over [y0, y1].
        """
        x0, y0, x1, y1 = (float(v) for v in box)
        if res < 1 or x1 < x0 or y1 < y0:
            raise ValueError("bad grid box or resolution")
        g1 = np.linspace(x0, x1, res)
        g2 = np.linspace(y0, y1, res)
        uu1, uu2 = np.meshgrid(g1, g2, indexing="ij")
        keep = uu1 <= uu2
        pts = np.column_stack((uu1[keep], uu2[keep]))
        if len(pts) == 0:
            raise ValueError("grid box does not meet U")
        return cls(pts, np.full(len(pts), total / len(pts)))

    @property
    def total(self) -> float:
        return math.fsum(self.weights)

    def __len__(self):
        return len(self.weights)


def _require_family(A) -> IntervalFamily:
    if isinstance(A, Interval) or not isinstance(A, IntervalFamily):
        raise TypeError("exhaustive scoring needs an IntervalFamily; plain intervals are "
                        "selective reports")
    return A


def _in_quadrant(points: np.ndarray, y: float) -> np.ndarray:
    return (points[:, 0] <= y) & (y <= points[:, 1])


def v_selective(x: Interval, y, alpha: float):
    """Selective identification: 1{y in [x.lo, x.hi]} - alpha (vectorized in y)."""
    y = np.asarray(y, dtype=float)
    out = ((y >= x.lo) & (y <= x.hi)).astype(float) - alpha
    return float(out) if out.ndim == 0 else out


def exhaustive_score(A: IntervalFamily, y: float, alpha: float, mu: PointMeasure) -> float:
    """alpha mu(A) - mu(Q_y and A)."""
    A = _require_family(A)
    inA = A.contains(mu.points[:, 0], mu.points[:, 1])
    inQ = _in_quadrant(mu.points, y)
    w = mu.weights
    return math.fsum(np.where(inA, alpha * w, 0.0)) - math.fsum(w[inA & inQ])


def normalized_score(A: IntervalFamily, y: float, alpha: float, mu: PointMeasure) -> float:
    """(1 - alpha) mu(Q_y minus A) + alpha mu(A minus Q_y); zero when A = Q_y."""
    A = _require_family(A)
    inA = A.contains(mu.points[:, 0], mu.points[:, 1])
    inQ = _in_quadrant(mu.points, y)
    w = mu.weights
    terms = np.where(inQ & ~inA, (1.0 - alpha) * w, 0.0) + np.where(inA & ~inQ, alpha * w, 0.0)
    return math.fsum(terms)


def elementary_score(A: IntervalFamily, y: float, alpha: float, u: Sequence[float]) -> float:
    """Normalized score for the unit point mass at ``u = (u1, u2)``."""
    return normalized_score(A, y, alpha, PointMeasure.dirac(u[0], u[1]))


def _u_array(u_grid) -> np.ndarray:
    u = np.asarray(u_grid, dtype=float).reshape(-1, 2)
    if np.any(u[:, 0] > u[:, 1]):
        raise ValueError("u-grid points must satisfy u1 <= u2")
    return u


def expected_elementary(A: IntervalFamily, dist: Distribution, alpha: float, u_grid) -> np.ndarray:
    """E_F S_u(A, Y) = (1-alpha) 1{u not in A} p + alpha 1{u in A} (1 - p), p = F([u1, u2])."""
    A = _require_family(A)
    u = _u_array(u_grid)
    p = np.array([prob_closed_interval(dist, a, b) for a, b in u])
    inA = A.contains(u[:, 0], u[:, 1])
    return np.where(inA, alpha * (1.0 - p), (1.0 - alpha) * p)


def expected_normalized(A: IntervalFamily, dist: Distribution, alpha: float,
                        mu: PointMeasure) -> float:
    """E_F S_mu(A, Y), the mu-weighted sum of expected elementary scores."""
    return math.fsum(mu.weights * expected_elementary(A, dist, alpha, mu.points))


def murphy_expected(families: Sequence[IntervalFamily], dist: Distribution, alpha: float,
                    u_grid) -> np.ndarray:
    """Expected elementary scores, one row per family and one column per ``u``."""
    return np.vstack([expected_elementary(A, dist, alpha, u_grid) for A in families])


def murphy_empirical(forecasts: Sequence[Sequence[IntervalFamily]], observations: Sequence[float],
                     alpha: float, u_grid) -> np.ndarray:
    """Average elementary scores over cases.

    ``forecasts[j][t]`` is forecaster ``j``'s family for case ``t``.
    """
    if len(forecasts) == 0:
        raise ValueError("no forecasters given")
    u = _u_array(u_grid)
    y = np.asarray(observations, dtype=float)
    n = len(y)
    if n == 0:
        raise ValueError("no cases given")
    out = np.empty((len(forecasts), len(u)))
    for j, fams in enumerate(forecasts):
        if len(fams) != n:
            raise ValueError(f"forecaster {j} has {len(fams)} cases, observations have {n}")
        per_case = np.empty((n, len(u)))
        for t, (A, yt) in enumerate(zip(fams, y)):
            A = _require_family(A)
            inA = A.contains(u[:, 0], u[:, 1])
            inQ = _in_quadrant(u, yt)
            per_case[t] = np.where(inQ & ~inA, 1.0 - alpha, 0.0) + np.where(inA & ~inQ, alpha, 0.0)
        out[j] = [math.fsum(col) / n for col in per_case.T]
    return out


def calibration_stat(intervals: Sequence[Interval], observations: Sequence[float],
                     alpha: float) -> tuple[float, float]:
    """Mean of the selective identification over cases and its standard error."""
    if len(intervals) != len(observations):
        raise ValueError("intervals and observations differ in length")
    n = len(intervals)
    if n < 2:
        raise ValueError("need at least two cases")
    v = np.array([v_selective(x, y, alpha) for x, y in zip(intervals, observations)])
    mean = math.fsum(v) / n
    sd = math.sqrt(math.fsum((v - mean) ** 2) / (n - 1))
    return mean, sd / math.sqrt(n)


def winkler_score(x: Interval, y, alpha: float):
    """Interval score of a central alpha-interval: width plus scaled exceedance."""
    y = np.asarray(y, dtype=float)
    c = 2.0 / (1.0 - alpha)
    out = (x.hi - x.lo) + c * np.maximum(x.lo - y, 0.0) + c * np.maximum(y - x.hi, 0.0)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ScoreReport:
    case_ids: tuple[str, ...]
    scores: tuple[float, ...]

    @property
    def mean(self) -> float:
        if not self.scores:
            return math.nan
        if any(s == math.inf for s in self.scores):
            return math.inf
        return math.fsum(self.scores) / len(self.scores)

    def to_csv(self) -> str:
        lines = ["case_id,score"]
        lines += [f"{c},{_fmt(s)}" for c, s in zip(self.case_ids, self.scores)]
        lines.append(f"mean,{_fmt(self.mean)}")
        return "\n".join(lines) + "\n"


def _fmt(v: float) -> str:
    if v == math.inf:
        return "inf"
    if v == -math.inf:
        return "-inf"
    return repr(float(v))
