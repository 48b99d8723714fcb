"""Prediction-interval geometry: the boundary function, centred half-widths,
sampled interval families and shortest prediction intervals."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .dist_core import (
    LEVEL_TOL,
    Distribution,
    cdf,
    cdf_left,
    lower_quantile,
    partial_crossing,
    prob_closed_interval,
    upper_quantile,
)

DEFAULT_TIE_TOL = 1e-9
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class OutOfDomainError(ValueError):
    """Lower endpoint ``a`` has too much mass below it: F(a-) > 1 - alpha."""


def _check_alpha(alpha: float, allow_one: bool = True) -> None:
    hi_ok = alpha <= 1.0 if allow_one else alpha < 1.0
    if not (alpha > 0.0 and hi_ok):
        raise ValueError(f"alpha={alpha} out of range")


@dataclass(frozen=True)
class Interval:
    """Closed interval ``[lo, hi]`` with possibly infinite endpoints."""

    lo: float
    hi: float

    def __post_init__(self):
        lo, hi = float(self.lo), float(self.hi)
        if math.isnan(lo) or math.isnan(hi) or lo > hi:
            raise ValueError(f"invalid interval [{lo}, {hi}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def length(self) -> float:
        return self.hi - self.lo

    def contains(self, y):
        return (np.asarray(y) >= self.lo) & (np.asarray(y) <= self.hi)

    def as_tuple(self) -> tuple[float, float]:
        return (self.lo, self.hi)


def gamma_alpha(dist: Distribution, alpha: float, a: float) -> float:
    """Upper endpoint of the shortest alpha-prediction interval starting at ``a``.

    Equals the lower quantile of ``dist`` at level ``alpha + F(a-)``; defined
    only when ``F(a-) <= 1 - alpha``.
    """
    _check_alpha(alpha)
    below = cdf_left(dist, a)
    if below > 1.0 - alpha + LEVEL_TOL:
        raise OutOfDomainError(f"F({a}-) = {below} exceeds 1 - alpha = {1.0 - alpha}")
    level = min(1.0, alpha + below)
    b = lower_quantile(dist, level)
    return max(a, b)


def domain_cut(dist: Distribution, alpha: float) -> float:
    """sup{a : F(a-) <= 1 - alpha}, the largest admissible lower endpoint."""
    _check_alpha(alpha)
    return upper_quantile(dist, 1.0 - alpha)


def d_alpha(dist: Distribution, alpha: float, m: float) -> float:
    """Smallest c >= 0 with F([m - c, m + c]) >= alpha."""
    _check_alpha(alpha)
    bps = list(dist.breakpoints())
    pts, _, _ = dist._table
    cands = [0.0] + [abs(p - m) for p in bps] + [abs(p - m) for p in pts]
    if dist.is_smooth:
        cands.append(max(abs(p - m) for p in pts) * 2.0 + 1.0)

    def g(c):
        return cdf(dist, m + c) - cdf_left(dist, m - c)

    def g_left(c):
        return cdf_left(dist, m + c) - cdf(dist, m - c)

    return partial_crossing(g, g_left, cands, alpha, dist.is_smooth)


@dataclass(frozen=True, eq=False)
class IntervalFamily:
    """Upper set of intervals given as the epigraph of a sampled boundary.

    ``gamma[i]`` is the boundary on ``(grid[i-1], grid[i]]``; left of the
    first grid point the boundary is ``gamma[0]``, at ``-inf`` it is
    ``left_tail``, and right of the last grid point (up to ``domain_cut``)
    it is extended by ``max(gamma[-1], a)``.  A pair ``(u1, u2)`` with
    ``u1 <= u2`` belongs to the family iff ``u1 <= domain_cut`` and
    ``u2 >= boundary(u1)``.
    """

    grid: np.ndarray
    gamma: np.ndarray
    domain_cut: float
    left_tail: float
    _slack: float = field(default=1e-9, repr=False)

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        gamma = np.asarray(self.gamma, dtype=float)
        if grid.ndim != 1 or grid.shape != gamma.shape or len(grid) == 0:
            raise ValueError("grid and gamma must be 1-d arrays of equal nonzero length")
        if np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        with np.errstate(invalid="ignore"):
            decreasing = np.any(np.diff(gamma) < -self._slack)
        if decreasing:
            raise ValueError("gamma must be nondecreasing along the grid")
        if np.any(gamma < grid - self._slack):
            raise ValueError("gamma(a) must be >= a")
        if np.any(np.isinf(gamma[:-1])) or np.any(gamma == -math.inf):
            raise ValueError("+inf is allowed only at the final grid point")
        if self.left_tail > gamma[0] + self._slack:
            raise ValueError("left_tail exceeds gamma at the first grid point")
        if self.domain_cut < grid[-1]:
            raise ValueError("domain_cut lies left of the last grid point")
        grid.setflags(write=False)
        gamma.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "domain_cut", float(self.domain_cut))
        object.__setattr__(self, "left_tail", float(self.left_tail))

    @classmethod
    def quadrant(cls, y: float) -> "IntervalFamily":
        """The family of all intervals containing ``y``."""
        return cls(np.array([y], dtype=float), np.array([y], dtype=float), y, y)

    def boundary(self, a) -> np.ndarray:
        """Boundary value at lower endpoints ``a`` (``nan`` outside the domain)."""
        a = np.atleast_1d(np.asarray(a, dtype=float))
        idx = np.searchsorted(self.grid, a, side="left")
        inner = np.minimum(idx, len(self.grid) - 1)
        out = self.gamma[inner].copy()
        beyond = idx >= len(self.grid)
        out[beyond] = np.maximum(self.gamma[-1], a[beyond])
        out[a == -math.inf] = self.left_tail
        out[a > self.domain_cut] = np.nan
        return out

    def contains(self, u1, u2) -> np.ndarray:
        u1 = np.atleast_1d(np.asarray(u1, dtype=float))
        u2 = np.atleast_1d(np.asarray(u2, dtype=float))
        bnd = self.boundary(u1)
        with np.errstate(invalid="ignore"):
            return (u1 <= self.domain_cut) & (u2 >= bnd) & (u1 <= u2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("a,gamma\n")
        for a, g in zip(self.grid, self.gamma):
            buf.write(f"{_fmt(a)},{_fmt(g)}\n")
        buf.write(f"domain_cut,{_fmt(self.domain_cut)}\n")
        buf.write(f"left_tail,{_fmt(self.left_tail)}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "IntervalFamily":
        lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
        if not lines or lines[0].replace(" ", "") != "a,gamma":
            raise ValueError("line 1: expected header 'a,gamma'")
        grid, gamma, footer = [], [], {}
        for lineno, ln in enumerate(lines[1:], start=2):
            parts = ln.split(",")
            if len(parts) != 2:
                raise ValueError(f"line {lineno}: expected two fields")
            key, val = parts[0].strip(), parts[1].strip()
            try:
                if key in ("domain_cut", "left_tail"):
                    footer[key] = _parse(val)
                else:
                    grid.append(_parse(key))
                    gamma.append(_parse(val))
            except ValueError:
                raise ValueError(f"line {lineno}: non-numeric value in {ln!r}") from None
        if set(footer) != {"domain_cut", "left_tail"}:
            raise ValueError("missing footer keys domain_cut/left_tail")
        return cls(np.array(grid), np.array(gamma), footer["domain_cut"], footer["left_tail"])


def _fmt(v: float) -> str:
    if v == math.inf:
        return "inf"
    if v == -math.inf:
        return "-inf"
    return repr(float(v))


def _parse(s: str) -> float:
    v = float(s)
    if math.isnan(v):
        raise ValueError("nan")
    return v


def default_grid(dist: Distribution, alpha: float, n: int = 201, eps: float = 1e-3) -> np.ndarray:
    """``n`` points on [q^-_eps, domain cut] plus the structural breakpoints in that range."""
    cut = domain_cut(dist, alpha)
    lo = lower_quantile(dist, eps)
    if not math.isfinite(cut):
        cut = upper_quantile(dist, 1.0 - eps)
    lo = min(lo, cut)
    pts = np.linspace(lo, cut, n) if cut > lo else np.array([cut])
    bps = [p for p in dist.breakpoints() if lo <= p <= cut]
    return np.unique(np.concatenate((pts, bps, [cut])))


def prediction_family(dist: Distribution, alpha: float, grid: Iterable[float] | None = None,
                      n: int = 201, eps: float = 1e-3) -> IntervalFamily:
    """Sample the family of alpha-prediction intervals of ``dist``.

    Grid points beyond the admissible domain are dropped and the domain cut
    itself is always included, so the boundary is exact at every grid point.
    """
    _check_alpha(alpha)
    cut = domain_cut(dist, alpha)
    if grid is None:
        pts = default_grid(dist, alpha, n, eps)
    else:
        pts = np.asarray(list(grid), dtype=float)
        pts = pts[np.isfinite(pts) & (pts <= cut)]
        if math.isfinite(cut):
            pts = np.append(pts, cut)
        pts = np.unique(pts)
    if len(pts) == 0:
        raise ValueError("grid has no admissible lower endpoints")
    gam = np.array([gamma_alpha(dist, alpha, a) for a in pts])
    # an infinite boundary marks the cut; a grid point within rounding of it
    # takes that role and the numerically computed cut is dropped
    inf_at = np.flatnonzero(gam == math.inf)
    if len(inf_at) and inf_at[0] < len(pts) - 1:
        k = inf_at[0]
        pts, gam, cut = pts[:k + 1], gam[:k + 1], float(pts[k])
    return IntervalFamily(pts, gam, cut, lower_quantile(dist, alpha))


@dataclass(frozen=True)
class ShortestIntervals:
    intervals: tuple[Interval, ...]
    length: float

    def as_set(self) -> set[tuple[float, float]]:
        return {iv.as_tuple() for iv in self.intervals}


def _golden_min(h, lo, hi, xtol=1e-11, iters=200):
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    hc, hd = h(c), h(d)
    for _ in range(iters):
        if b - a <= xtol * (1.0 + abs(a) + abs(b)):
            break
        if hc <= hd:
            b, d, hd = d, c, hc
            c = b - _GOLDEN * (b - a)
            hc = h(c)
        else:
            a, c, hc = c, d, hd
            d = a + _GOLDEN * (b - a)
            hd = h(d)
    return (c, hc) if hc <= hd else (d, hd)


def shortest_intervals(dist: Distribution, alpha: float, tie_tol: float = DEFAULT_TIE_TOL,
                       n_scan: int = 801) -> ShortestIntervals:
    """All shortest alpha-prediction intervals found by structural search.

    The length ``h(x) = gamma(x) - x`` is scanned over structural
    breakpoints, their preimages under the boundary, the domain cut and (for
    laws with a density) a dense grid; local minima of the grid scan are
    polished by golden-section search inside their bracketing cells.  Every
    candidate within ``tie_tol`` of the minimal length is returned.  When a
    continuum of minimizers exists, the returned set samples it.
    """
    _check_alpha(alpha)
    lo_s, hi_s = dist.support()
    if alpha >= 1.0:
        iv = Interval(lo_s, hi_s)
        return ShortestIntervals((iv,), iv.length)

    cut = domain_cut(dist, alpha)

    def h(x):
        return gamma_alpha(dist, alpha, x) - x

    bps = [float(p) for p in dist.breakpoints()]
    cands = {cut}
    cands.update(p for p in bps if p <= cut)
    # lower endpoints whose shortest interval ends exactly at a breakpoint
    for p in bps:
        for level in (cdf(dist, p), cdf_left(dist, p)):
            lev = level - alpha
            if 0.0 < lev < 1.0:
                for q in (lower_quantile(dist, lev), upper_quantile(dist, lev)):
                    if math.isfinite(q) and q <= cut:
                        cands.add(q)
    has_density = (1.0 - math.fsum(dist.atoms().values())) > 1e-15
    scan = []
    if has_density:
        left = max(lower_quantile(dist, 1e-10), lo_s)
        if math.isfinite(left) and left < cut:
            scan = np.linspace(left, cut, n_scan).tolist()
    pts = sorted(set(scan) | {c for c in cands if math.isfinite(c)})
    vals = [h(x) for x in pts]
    found = list(zip(pts, vals))
    if has_density:
        for i in range(1, len(pts) - 1):
            if vals[i] <= vals[i - 1] and vals[i] <= vals[i + 1]:
                x, hx = _golden_min(h, pts[i - 1], pts[i + 1])
                found.append((x, hx))
    best = min(v for _, v in found)
    chosen = sorted({x for x, v in found if v <= best + tie_tol})
    out: list[Interval] = []
    for x in chosen:
        b = gamma_alpha(dist, alpha, x)
        if out and abs(out[-1].lo - x) <= 1e-7 and abs(out[-1].hi - b) <= 1e-7:
            continue
        out.append(Interval(x, b))
    for iv in out:
        if prob_closed_interval(dist, iv.lo, iv.hi) < alpha - 1e-9:
            raise RuntimeError(f"internal error: {iv} has coverage below alpha")
    return ShortestIntervals(tuple(out), best)


def family_contains(outer: IntervalFamily, inner: IntervalFamily, points: Iterable[float],
                    slack: float = 1e-12) -> bool:
    """Check ``inner`` is a subset of ``outer`` at the lower endpoints ``points``.

    Both domains must nest and the outer boundary must lie weakly below the
    inner one wherever the inner family is defined.
    """
    if inner.domain_cut > outer.domain_cut:
        return False
    if inner.left_tail < outer.left_tail - slack:
        return False
    a = np.asarray(list(points), dtype=float)
    a = a[a <= inner.domain_cut]
    if len(a) == 0:
        return True
    return bool(np.all(outer.boundary(a) <= inner.boundary(a) + slack))
