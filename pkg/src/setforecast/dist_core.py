"""Exact univariate distribution arithmetic for a structural mixture family.

The family is closed under mixing and consists of point masses, uniform
laws, normal laws and piecewise-constant densities.  Every member exposes
its CDF, left limits, atoms and structural breakpoints, which is enough to
compute quantile *sets* exactly (up to root finding inside smooth cells) and
to decide membership in the alpha-pseudo-increasing class.

Extended reals are plain Python floats; ``math.inf`` and ``-math.inf`` are
totally ordered with the finite values.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Sequence

import numpy as np

# Levels closer than this are treated as equal when deciding which side of a
# breakpoint a quantile falls on.
LEVEL_TOL = 1e-12
# Normal tails are truncated this many standard deviations out when a finite
# bracket is needed.
NORMAL_SPAN = 40.0
_BISECT_ITERS = 200


class InvalidIntervalError(ValueError):
    """Raised when an interval with ``a > b`` is requested."""


@dataclass(frozen=True)
class QuantileSet:
    """Closed quantile set ``[lower, upper]`` in the extended reals."""

    lower: float
    upper: float

    def __post_init__(self):
        if self.lower > self.upper:
            raise ValueError(f"lower {self.lower} exceeds upper {self.upper}")

    @property
    def is_singleton(self) -> bool:
        return self.lower == self.upper


class Distribution:
    """Base class of the structural mixture family.

    Subclasses implement ``cdf``, ``cdf_left``, ``atoms``, ``breakpoints``,
    ``support`` and ``density`` (density of the absolutely continuous part).
    """

    is_smooth = False  # True when a Normal component is present somewhere

    def cdf(self, x: float) -> float:
        raise NotImplementedError

    def cdf_left(self, x: float) -> float:
        raise NotImplementedError

    def atoms(self) -> dict[float, float]:
        return {}

    def breakpoints(self) -> tuple[float, ...]:
        raise NotImplementedError

    def support(self) -> tuple[float, float]:
        raise NotImplementedError

    def density(self, y: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError

    # -- cached lookup tables -------------------------------------------
    @cached_property
    def _table(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Points bracketing all structure, with F and F(-) at each point."""
        pts = list(self.breakpoints())
        for m, s in _normal_parts(self):
            pts.extend((m - NORMAL_SPAN * s, m + NORMAL_SPAN * s))
        pts = np.unique(np.asarray(pts, dtype=float))
        right = np.array([self.cdf(p) for p in pts])
        left = np.array([self.cdf_left(p) for p in pts])
        # enforce monotonicity against rounding in long mixtures
        right = np.maximum.accumulate(right)
        left = np.minimum(left, right)
        return pts, right, left


def _normal_parts(dist: Distribution) -> list[tuple[float, float]]:
    if isinstance(dist, Normal):
        return [(dist.mean, dist.sd)]
    if isinstance(dist, Mixture):
        out = []
        for comp in dist.components:
            out.extend(_normal_parts(comp))
        return out
    return []


def _normal_cdf(z):
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


@dataclass(frozen=True, eq=False)
class Dirac(Distribution):
    point: float

    def __post_init__(self):
        if not math.isfinite(self.point):
            raise ValueError("Dirac point must be finite")

    def cdf(self, x):
        return 1.0 if x >= self.point else 0.0

    def cdf_left(self, x):
        return 1.0 if x > self.point else 0.0

    def atoms(self):
        return {float(self.point): 1.0}

    def breakpoints(self):
        return (float(self.point),)

    def support(self):
        return (float(self.point), float(self.point))

    def density(self, y):
        return np.zeros_like(np.asarray(y, dtype=float))

    def sample(self, rng, size):
        return np.full(size, float(self.point))

    def to_dict(self):
        return {"type": "dirac", "at": self.point}


@dataclass(frozen=True, eq=False)
class Uniform(Distribution):
    lo: float
    hi: float

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)) or not self.lo < self.hi:
            raise ValueError(f"Uniform needs finite lo < hi, got ({self.lo}, {self.hi})")

    def cdf(self, x):
        if x <= self.lo:
            return 0.0
        if x >= self.hi:
            return 1.0
        return (x - self.lo) / (self.hi - self.lo)

    cdf_left = cdf

    def breakpoints(self):
        return (float(self.lo), float(self.hi))

    def support(self):
        return (float(self.lo), float(self.hi))

    def density(self, y):
        y = np.asarray(y, dtype=float)
        return np.where((y >= self.lo) & (y <= self.hi), 1.0 / (self.hi - self.lo), 0.0)

    def sample(self, rng, size):
        return rng.uniform(self.lo, self.hi, size)

    def to_dict(self):
        return {"type": "uniform", "lo": self.lo, "hi": self.hi}


@dataclass(frozen=True, eq=False)
class Normal(Distribution):
    mean: float
    sd: float
    is_smooth = True

    def __post_init__(self):
        if not self.sd > 0 or not math.isfinite(self.mean):
            raise ValueError("Normal needs finite mean and sd > 0")

    def cdf(self, x):
        if x == math.inf:
            return 1.0
        if x == -math.inf:
            return 0.0
        return _normal_cdf((x - self.mean) / self.sd)

    cdf_left = cdf

    def breakpoints(self):
        return ()

    def support(self):
        return (-math.inf, math.inf)

    def density(self, y):
        z = (np.asarray(y, dtype=float) - self.mean) / self.sd
        return np.exp(-0.5 * z * z) / (self.sd * math.sqrt(2.0 * math.pi))

    def sample(self, rng, size):
        return rng.normal(self.mean, self.sd, size)

    def to_dict(self):
        return {"type": "normal", "mean": self.mean, "sd": self.sd}


@dataclass(frozen=True, eq=False)
class GridDensity(Distribution):
    """Piecewise-constant density on consecutive cells ``[k_i, k_{i+1}]``."""

    knots: tuple[float, ...]
    densities: tuple[float, ...]
    _cum: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        knots = np.asarray(self.knots, dtype=float)
        dens = np.asarray(self.densities, dtype=float)
        if knots.ndim != 1 or len(knots) < 2 or len(dens) != len(knots) - 1:
            raise ValueError("need m+1 knots and m densities")
        if not np.all(np.isfinite(knots)) or np.any(np.diff(knots) <= 0):
            raise ValueError("knots must be finite and strictly increasing")
        if np.any(dens < 0) or not np.all(np.isfinite(dens)):
            raise ValueError("densities must be finite and nonnegative")
        masses = dens * np.diff(knots)
        total = math.fsum(masses)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"cell masses sum to {total}, not 1")
        cum = np.concatenate(([0.0], np.cumsum(masses)))
        cum[-1] = 1.0
        object.__setattr__(self, "knots", tuple(float(k) for k in knots))
        object.__setattr__(self, "densities", tuple(float(d) for d in dens))
        object.__setattr__(self, "_cum", cum)

    @classmethod
    def from_masses(cls, knots: Sequence[float], masses: Sequence[float]) -> "GridDensity":
        knots = np.asarray(knots, dtype=float)
        return cls(tuple(knots), tuple(np.asarray(masses, dtype=float) / np.diff(knots)))

    @cached_property
    def _knot_arr(self):
        return np.asarray(self.knots)

    def cdf(self, x):
        k = self._knot_arr
        if x <= k[0]:
            return 0.0
        if x >= k[-1]:
            return 1.0
        i = int(np.searchsorted(k, x, side="right")) - 1
        if x == k[i]:
            return float(self._cum[i])
        return float(min(1.0, self._cum[i] + self.densities[i] * (x - k[i])))

    cdf_left = cdf

    def breakpoints(self):
        return self.knots

    def support(self):
        pos = np.nonzero(np.asarray(self.densities) > 0)[0]
        return (self.knots[pos[0]], self.knots[pos[-1] + 1])

    def density(self, y):
        y = np.asarray(y, dtype=float)
        k = self._knot_arr
        idx = np.clip(np.searchsorted(k, y, side="right") - 1, 0, len(self.densities) - 1)
        inside = (y >= k[0]) & (y <= k[-1])
        return np.where(inside, np.asarray(self.densities)[idx], 0.0)

    def sample(self, rng, size):
        u = rng.uniform(0.0, 1.0, size)
        return np.array([lower_quantile(self, float(v)) for v in u])

    def to_dict(self):
        return {"type": "grid", "knots": list(self.knots), "densities": list(self.densities)}


@dataclass(frozen=True, eq=False)
class Mixture(Distribution):
    weights: tuple[float, ...]
    components: tuple[Distribution, ...]

    def __post_init__(self):
        w = tuple(float(v) for v in self.weights)
        if len(w) != len(self.components) or not w:
            raise ValueError("weights and components must have equal, nonzero length")
        if any(v <= 0 for v in w):
            raise ValueError("mixture weights must be positive")
        if abs(math.fsum(w) - 1.0) > 1e-12:
            raise ValueError(f"mixture weights sum to {math.fsum(w)}")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "components", tuple(self.components))

    @property
    def is_smooth(self):
        return any(c.is_smooth for c in self.components)

    def cdf(self, x):
        return min(1.0, math.fsum(w * c.cdf(x) for w, c in zip(self.weights, self.components)))

    def cdf_left(self, x):
        return min(1.0, math.fsum(w * c.cdf_left(x) for w, c in zip(self.weights, self.components)))

    def atoms(self):
        out: dict[float, float] = {}
        for w, c in zip(self.weights, self.components):
            for p, m in c.atoms().items():
                out[p] = out.get(p, 0.0) + w * m
        return out

    def breakpoints(self):
        pts = set()
        for c in self.components:
            pts.update(c.breakpoints())
        return tuple(sorted(pts))

    def support(self):
        lo = min(c.support()[0] for c in self.components)
        hi = max(c.support()[1] for c in self.components)
        return (lo, hi)

    def density(self, y):
        y = np.asarray(y, dtype=float)
        out = np.zeros_like(y)
        for w, c in zip(self.weights, self.components):
            out = out + w * c.density(y)
        return out

    def sample(self, rng, size):
        which = rng.choice(len(self.components), size=size, p=np.asarray(self.weights))
        out = np.empty(size)
        for j, c in enumerate(self.components):
            idx = np.nonzero(which == j)[0]
            if len(idx):
                out[idx] = c.sample(rng, len(idx))
        return out

    def to_dict(self):
        comps = []
        for w, c in zip(self.weights, self.components):
            d = c.to_dict()
            d["w"] = w
            comps.append(d)
        return {"type": "mixture", "components": comps}


def mixture(pairs: Iterable[tuple[float, Distribution]]) -> Distribution:
    """Build a mixture from ``(weight, component)`` pairs, dropping zero weights."""
    pairs = [(float(w), c) for w, c in pairs if w > 0]
    if len(pairs) == 1:
        return pairs[0][1]
    total = math.fsum(w for w, _ in pairs)
    return Mixture(tuple(w / total for w, _ in pairs), tuple(c for _, c in pairs))


# -- JSON config --------------------------------------------------------

def _ext(v) -> float:
    if isinstance(v, str):
        s = v.strip().lower()
        if s in ("inf", "+inf", "infinity"):
            return math.inf
        if s in ("-inf", "-infinity"):
            return -math.inf
    return float(v)


def from_dict(d: dict) -> Distribution:
    kind = d.get("type")
    if kind == "dirac":
        return Dirac(_ext(d["at"]))
    if kind == "uniform":
        return Uniform(_ext(d["lo"]), _ext(d["hi"]))
    if kind == "normal":
        return Normal(_ext(d["mean"]), _ext(d["sd"]))
    if kind == "grid":
        return GridDensity(tuple(_ext(k) for k in d["knots"]), tuple(float(v) for v in d["densities"]))
    if kind == "mixture":
        comps = d["components"]
        return Mixture(tuple(float(c["w"]) for c in comps), tuple(from_dict(c) for c in comps))
    raise ValueError(f"unknown distribution type {kind!r}")


def load_distribution(path) -> Distribution:
    with open(path) as fh:
        return from_dict(json.load(fh))


def dumps_distribution(dist: Distribution) -> str:
    return json.dumps(dist.to_dict())


# -- public operations --------------------------------------------------

def cdf(dist: Distribution, x: float) -> float:
    """F(x) = P(Y <= x)."""
    if x == math.inf:
        return 1.0
    if x == -math.inf:
        return 0.0
    return dist.cdf(x)


def cdf_left(dist: Distribution, x: float) -> float:
    """F(x-) = P(Y < x)."""
    if x == math.inf:
        return 1.0
    if x == -math.inf:
        return 0.0
    return dist.cdf_left(x)


def prob_closed_interval(dist: Distribution, a: float, b: float) -> float:
    """F([a, b]) = F(b) - F(a-), clamped to [0, 1]."""
    if a > b:
        raise InvalidIntervalError(f"invalid interval [{a}, {b}]")
    return min(1.0, max(0.0, cdf(dist, b) - cdf_left(dist, a)))


def _solve_cell(dist, lo, hi, level, f_lo, f_hi_left):
    """Locate where the continuous, nondecreasing F crosses ``level`` in (lo, hi)."""
    if abs(f_lo - level) <= LEVEL_TOL:
        return lo
    if abs(f_hi_left - level) <= LEVEL_TOL:
        return hi
    if not dist.is_smooth:
        t = lo + (level - f_lo) / (f_hi_left - f_lo) * (hi - lo)
        return min(hi, max(lo, t))
    a, b = lo, hi
    for _ in range(_BISECT_ITERS):
        mid = 0.5 * (a + b)
        if mid <= a or mid >= b:
            break
        if dist.cdf(mid) >= level:
            b = mid
        else:
            a = mid
    return b


def _first_crossing(dist: Distribution, level: float, strict: bool) -> float:
    """inf{t : F(t) >= level} (or ``> level`` when ``strict``)."""
    pts, right, left = dist._table
    if strict:
        k = int(np.searchsorted(right, level + LEVEL_TOL, side="right"))
        hit = lambda v: v > level + LEVEL_TOL  # noqa: E731
    else:
        k = int(np.searchsorted(right, level - LEVEL_TOL, side="left"))
        hit = lambda v: v >= level - LEVEL_TOL  # noqa: E731
    if k >= len(pts):
        return math.inf
    if k == 0 or not hit(left[k]):
        return float(pts[k])
    return float(_solve_cell(dist, pts[k - 1], pts[k], level, right[k - 1], left[k]))


def lower_quantile(dist: Distribution, beta: float) -> float:
    """q^-_beta(F) = inf{t : F(t) >= beta}, with q^-_0 = -inf."""
    if beta <= 0.0:
        return -math.inf
    if beta >= 1.0:
        return dist.support()[1]
    return _first_crossing(dist, beta, strict=False)


def upper_quantile(dist: Distribution, beta: float) -> float:
    """q^+_beta(F) = sup{t : F(t-) <= beta}, with q^+_1 = +inf."""
    if beta >= 1.0:
        return math.inf
    if beta <= 0.0:
        return dist.support()[0]
    return _first_crossing(dist, beta, strict=True)


def quantile_set(dist: Distribution, beta: float) -> QuantileSet:
    """The beta-quantile set {t : F(t-) <= beta <= F(t)} as a closed interval."""
    if not 0.0 <= beta <= 1.0:
        raise ValueError(f"level {beta} outside [0, 1]")
    return QuantileSet(lower_quantile(dist, beta), upper_quantile(dist, beta))


def flat_levels(dist: Distribution) -> list[float]:
    """Levels c in (0, 1) at which F is constant on a nondegenerate interval."""
    if dist.is_smooth:
        return []
    pts, right, left = dist._table
    out = []
    for i in range(len(pts) - 1):
        if left[i + 1] - right[i] <= LEVEL_TOL and LEVEL_TOL < right[i] < 1.0 - LEVEL_TOL:
            out.append(float(right[i]))
    return out


def is_pseudo_increasing(dist: Distribution, alpha: float) -> bool:
    """Membership of ``dist`` in the alpha-pseudo-increasing class.

    Requires singleton alpha- and (1-alpha)-quantiles, and that no flat-spot
    level beta in (0, 1-alpha) has a flat-spot partner at beta + alpha.  The
    second condition is equivalent to the pointwise definition because a
    non-singleton quantile set at level ``c`` in (0, 1) arises exactly from
    a flat CDF piece at height ``c``.
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must lie in (0, 1]")
    if not quantile_set(dist, alpha).is_singleton:
        return False
    if not quantile_set(dist, 1.0 - alpha).is_singleton:
        return False
    levels = flat_levels(dist)
    for lo in levels:
        if lo >= 1.0 - alpha - LEVEL_TOL:
            continue
        if any(abs(hi - (lo + alpha)) <= LEVEL_TOL for hi in levels):
            return False
    return True


def partial_crossing(g: Callable[[float], float], g_left: Callable[[float], float],
                     candidates: Sequence[float], level: float, smooth: bool) -> float:
    """inf{c >= 0 : g(c) >= level} for a right-continuous nondecreasing ``g``.

    ``candidates`` must contain every jump location of ``g`` and ``0``; between
    consecutive candidates ``g`` is continuous (affine unless ``smooth``).
    """
    cs = sorted(set(c for c in candidates if c >= 0.0))
    prev = None
    for c in cs:
        if g(c) >= level - LEVEL_TOL:
            if prev is None or g_left(c) < level - LEVEL_TOL:
                return c
            lo, hi = prev, c
            glo, ghi = g(lo), g_left(hi)
            if abs(glo - level) <= LEVEL_TOL:
                return lo
            if abs(ghi - level) <= LEVEL_TOL:
                return hi
            if not smooth:
                return min(hi, max(lo, lo + (level - glo) / (ghi - glo) * (hi - lo)))
            for _ in range(_BISECT_ITERS):
                mid = 0.5 * (lo + hi)
                if mid <= lo or mid >= hi:
                    break
                if g(mid) >= level:
                    hi = mid
                else:
                    lo = mid
            return hi
        prev = c
    return math.inf
