"""Vorob'ev quantiles of finitely supported random sets on a cell grid.

A random set is a list of ``(probability, GridSet)`` atoms.  Its coverage
function ``p(u) = P(u in Y)`` determines the Vorob'ev quantile
``Q_alpha = {u : p(u) >= alpha}`` together with the strict part
``Q_gt = {p > alpha}`` and the level part ``Q_eq = {p == alpha}``.

Threshold comparisons and the brute-force argmin use exact rational
arithmetic on the given floats (``fractions.Fraction`` is exact for every
finite double), so ties at ``p(u) == alpha`` are decided without rounding.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from .dist_core import Distribution, cdf

MAX_BRUTE_FORCE_CELLS = 20


@dataclass(frozen=True)
class Grid:
    """Cell weights of the reference measure; ``Grid.counting(n)`` for counting measure."""

    weights: tuple[float, ...]

    def __post_init__(self):
        w = tuple(float(v) for v in self.weights)
        if not w:
            raise ValueError("grid needs at least one cell")
        if any(not math.isfinite(v) or v < 0 for v in w):
            raise ValueError("cell weights must be finite and nonnegative")
        object.__setattr__(self, "weights", w)

    @classmethod
    def counting(cls, n: int) -> "Grid":
        return cls((1.0,) * n)

    @property
    def n(self) -> int:
        return len(self.weights)

    def weight(self, cells: Iterable[int]) -> float:
        return math.fsum(self.weights[u] for u in sorted(cells))


@dataclass(frozen=True)
class GridSet:
    """Subset of the cells ``0..n-1``."""

    cells: frozenset
    n: int

    def __post_init__(self):
        cells = frozenset(int(c) for c in self.cells)
        if self.n < 1:
            raise ValueError("n must be positive")
        if any(c < 0 or c >= self.n for c in cells):
            raise ValueError(f"cell index out of range 0..{self.n - 1}")
        object.__setattr__(self, "cells", cells)

    @classmethod
    def from_mask(cls, mask: Sequence) -> "GridSet":
        return cls(frozenset(i for i, b in enumerate(mask) if int(b)), len(mask))

    @property
    def mask(self) -> tuple[int, ...]:
        return tuple(int(i in self.cells) for i in range(self.n))

    def __contains__(self, u) -> bool:
        return u in self.cells

    def __le__(self, other: "GridSet") -> bool:
        return self.cells <= other.cells

    def complement(self) -> "GridSet":
        return GridSet(frozenset(range(self.n)) - self.cells, self.n)

    def to_text(self) -> str:
        return f"cells {self.n}\n" + " ".join(str(b) for b in self.mask) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "GridSet":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if len(lines) != 2:
            raise ValueError("grid-set file must have exactly two lines")
        head = lines[0].split()
        if len(head) != 2 or head[0] != "cells":
            raise ValueError("line 1: expected 'cells n'")
        try:
            n = int(head[1])
        except ValueError:
            raise ValueError("line 1: n is not an integer") from None
        bits = lines[1].split()
        if len(bits) != n or any(b not in ("0", "1") for b in bits):
            raise ValueError(f"line 2: expected {n} entries of 0/1")
        return cls.from_mask([int(b) for b in bits])


@dataclass(frozen=True)
class GridRandomSet:
    """Random set with atoms ``(p_k, S_k)``, ``p_k > 0`` summing to one."""

    atoms: tuple[tuple[float, GridSet], ...]

    def __post_init__(self):
        atoms = tuple((float(p), s) for p, s in self.atoms)
        if not atoms:
            raise ValueError("random set needs at least one atom")
        n = atoms[0][1].n
        if any(s.n != n for _, s in atoms):
            raise ValueError("atoms live on grids of different size")
        if any(not p > 0 for p, _ in atoms):
            raise ValueError("atom probabilities must be positive")
        total = math.fsum(p for p, _ in atoms)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"atom probabilities sum to {total}")
        object.__setattr__(self, "atoms", atoms)

    @property
    def n(self) -> int:
        return self.atoms[0][1].n

    def sample(self, rng: np.random.Generator, size: int) -> list[GridSet]:
        p = np.array([a for a, _ in self.atoms])
        idx = rng.choice(len(self.atoms), size=size, p=p / p.sum())
        return [self.atoms[i][1] for i in idx]

    def to_json(self) -> str:
        return json.dumps({"n": self.n,
                           "atoms": [{"p": p, "cells": sorted(s.cells)} for p, s in self.atoms]})

    @classmethod
    def from_json(cls, text: str) -> "GridRandomSet":
        try:
            doc = json.loads(text)
            n = int(doc["n"])
            atoms = tuple((float(a["p"]), GridSet(frozenset(a["cells"]), n)) for a in doc["atoms"])
        except (KeyError, TypeError, json.JSONDecodeError) as exc:
            raise ValueError(f"malformed random-set JSON: {exc}") from None
        return cls(atoms)


def read_weights(text: str) -> Grid:
    try:
        return Grid(tuple(float(v) for v in text.split()))
    except ValueError as exc:
        raise ValueError(f"malformed weights file: {exc}") from None


def coverage(Y: GridRandomSet) -> np.ndarray:
    """p(u) = sum of atom probabilities whose set contains u."""
    return np.array([math.fsum(p for p, s in Y.atoms if u in s) for u in range(Y.n)])


def coverage_exact(Y: GridRandomSet) -> list[Fraction]:
    return [sum((Fraction(p) for p, s in Y.atoms if u in s), Fraction(0)) for u in range(Y.n)]


def vorobev_sets(Y: GridRandomSet, alpha: float,
                 eq_tol: float = 0.0) -> tuple[GridSet, GridSet, GridSet]:
    """(Q_alpha, Q_gt, Q_eq).

    With ``eq_tol == 0`` the coverage is compared exactly; otherwise
    coverages within ``eq_tol`` of ``alpha`` count as equal, which suits
    estimated coverage.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha={alpha} outside [0, 1]")
    n = Y.n
    if eq_tol == 0.0:
        a = Fraction(alpha)
        cov = coverage_exact(Y)
        geq = {u for u in range(n) if cov[u] >= a}
        gt = {u for u in range(n) if cov[u] > a}
    else:
        cov = coverage(Y)
        eq = {u for u in range(n) if abs(cov[u] - alpha) <= eq_tol}
        gt = {u for u in range(n) if cov[u] > alpha and u not in eq}
        geq = gt | eq
    return GridSet(frozenset(geq), n), GridSet(frozenset(gt), n), GridSet(frozenset(geq - gt), n)


def v_alpha_ident(u: int, Yobs: GridSet, alpha: float) -> float:
    return (1.0 if u in Yobs else 0.0) - alpha


def score_tilde(X: GridSet, Yobs: GridSet, alpha: float, grid: Grid) -> float:
    """alpha w(X) - w(Y and X)."""
    return alpha * grid.weight(X.cells) - grid.weight(X.cells & Yobs.cells)


def score_normalized(X: GridSet, Yobs: GridSet, alpha: float, grid: Grid) -> float:
    """alpha w(X minus Y) + (1 - alpha) w(Y minus X)."""
    return math.fsum(_normalized_terms(X, Yobs, alpha, grid.weights))


def _normalized_terms(X, Yobs, alpha, weights):
    for u in range(X.n):
        inX, inY = u in X.cells, u in Yobs.cells
        if inX and not inY:
            yield weights[u] * alpha
        elif inY and not inX:
            yield weights[u] * (1.0 - alpha)


def elementary_vorobev(X: GridSet, Yobs: GridSet, alpha: float, u: int) -> float:
    inX, inY = u in X.cells, u in Yobs.cells
    if inX and not inY:
        return alpha
    if inY and not inX:
        return 1.0 - alpha
    return 0.0


def mixture_vorobev(X: GridSet, Yobs: GridSet, alpha: float, pi: Sequence[float]) -> float:
    """Integral of the elementary scores against the cell weights ``pi``."""
    if len(pi) != X.n:
        raise ValueError("weights and grid differ in length")
    return math.fsum(pi[u] * elementary_vorobev(X, Yobs, alpha, u) for u in range(X.n))


def expected_score(score, X: GridSet, Y: GridRandomSet, alpha: float, grid: Grid) -> float:
    """E score(X, Y) as the atom-weighted sum."""
    return math.fsum(p * score(X, s, alpha, grid) for p, s in Y.atoms)


def _exact_expected_normalized(X: GridSet, Y: GridRandomSet, alpha: float, pi) -> Fraction:
    a = Fraction(alpha)
    total = Fraction(0)
    for u, p in enumerate(coverage_exact(Y)):
        w = Fraction(pi[u])
        total += w * (a * (1 - p) if u in X.cells else (1 - a) * p)
    return total


def argmin_bruteforce(Y: GridRandomSet, alpha: float, grid: Grid) -> set[GridSet]:
    """All minimizers of the expected ``score_tilde`` over the 2^n subsets.

    The expectation is evaluated exactly: every probability, weight and
    ``alpha`` is lifted to an integer over a common denominator, so ties are
    exact.
    """
    n = Y.n
    if grid.n != n:
        raise ValueError("grid and random set differ in size")
    if n > MAX_BRUTE_FORCE_CELLS:
        raise ValueError(f"brute force limited to n <= {MAX_BRUTE_FORCE_CELLS}, got {n}")
    a = Fraction(alpha)
    w = [Fraction(v) for v in grid.weights]
    probs = [(Fraction(p), s) for p, s in Y.atoms]
    # E[alpha w(D) - w(Y and D)] = sum over u in D of w(u) (alpha - sum_{k: u in S_k} p_k)
    per_cell = [w[u] * a - sum((p * w[u] for p, s in probs if u in s), Fraction(0))
                for u in range(n)]
    denom = math.lcm(*(c.denominator for c in per_cell))
    ints = [c.numerator * (denom // c.denominator) for c in per_cell]
    size = 1 << n
    sums = [0] * size
    for mask in range(1, size):
        low = mask & -mask
        sums[mask] = sums[mask ^ low] + ints[low.bit_length() - 1]
    best = min(sums)
    winners = [m for m in range(size) if sums[m] == best]
    return {GridSet(frozenset(u for u in range(n) if m >> u & 1), n) for m in winners}


def argmin_band(Y: GridRandomSet, alpha: float, grid: Grid) -> set[GridSet]:
    """{D : Q_gt <= D <= Q_alpha}, with zero-weight cells left free."""
    q, gt, eq = vorobev_sets(Y, alpha)
    n = Y.n
    null = {u for u in range(n) if grid.weights[u] == 0.0}
    fixed = gt.cells - null
    free = sorted((eq.cells | null))
    out = set()
    for k in range(len(free) + 1):
        for extra in combinations(free, k):
            out.add(GridSet(frozenset(fixed | set(extra)), n))
    return out


def order_sensitivity_check(Y: GridRandomSet, alpha: float, pi: Sequence[float],
                            chain: Sequence[GridSet]) -> bool:
    """Expected mixture scores grow as nested sets move away from Q_alpha.

    ``chain`` must be nested (increasing or decreasing) and lie entirely on
    one side of Q_alpha.  Expected scores are compared exactly.
    """
    if len(chain) <= 1:
        return True
    q = vorobev_sets(Y, alpha)[0]
    inc = all(a <= b for a, b in zip(chain, chain[1:]))
    dec = all(b <= a for a, b in zip(chain, chain[1:]))
    if not (inc or dec):
        raise ValueError("chain is not nested")
    above = all(q <= c for c in chain)
    below = all(c <= q for c in chain)
    if not (above or below):
        raise ValueError("chain does not lie on one side of the Vorob'ev quantile")
    scores = [_exact_expected_normalized(c, Y, alpha, pi) for c in chain]
    # sets further from Q_alpha come later iff (increasing and above) or (decreasing and below)
    away = (inc and above) or (dec and below)
    pairs = zip(scores, scores[1:]) if away else zip(scores[1:], scores)
    return all(s <= t for s, t in pairs)


def embed_1d_quantile(Z: Distribution, alpha: float, thresholds: Sequence[float]) -> GridSet:
    """Vorob'ev alpha-quantile of the random ray [Z, inf) restricted to ``thresholds``.

    The ray meets the thresholds in ``{t_i : t_i >= Z}``; atomizing by the
    first threshold reached gives a random set whose coverage at ``t_i`` is
    ``F(t_i)``, so the quantile is the set of thresholds at or above the
    lower alpha-quantile of ``Z``.
    """
    t = np.asarray(thresholds, dtype=float)
    if len(t) == 0 or np.any(np.diff(t) <= 0):
        raise ValueError("thresholds must be nonempty and strictly increasing")
    n = len(t)
    F = [cdf(Z, float(v)) for v in t]
    atoms = []
    prev = 0.0
    for k in range(n):
        p = F[k] - prev
        if p > 0:
            atoms.append((p, GridSet(frozenset(range(k, n)), n)))
        prev = max(prev, F[k])
    if 1.0 - prev > 0:
        atoms.append((1.0 - prev, GridSet(frozenset(), n)))
    return vorobev_sets(GridRandomSet(tuple(atoms)), alpha, eq_tol=1e-12)[0]
