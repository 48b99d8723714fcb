"""Adaptive Simpson quadrature and expectations under mixture distributions."""

from __future__ import annotations

import math
from typing import Callable, Iterable

import numpy as np

from .dist_core import Distribution, _normal_parts

# Truncation for normal tails inside expectations; mass beyond is < 1e-30.
EXPECT_SPAN = 12.0


class QuadratureError(RuntimeError):
    pass


def adaptive_simpson(f: Callable[[np.ndarray], np.ndarray], edges: Iterable[float],
                     tol: float = 1e-11, max_depth: int = 48) -> float:
    """Integrate ``f`` over consecutive cells given by sorted ``edges``.

    All cells are refined together, level by level, so ``f`` is always called
    on numpy arrays.  A cell is accepted when the two-half Simpson estimate
    agrees with the whole-cell estimate to ``15 * tol * width / total``; the
    Richardson-corrected value is used.  Raises ``QuadratureError`` if some
    cell is still unresolved after ``max_depth`` bisections.

    ``f`` may jump at the edges; it is evaluated there as the limit from
    inside each cell (one ulp inwards).
    """
    e = np.unique(np.asarray(list(edges), dtype=float))
    if len(e) < 2:
        return 0.0
    if not np.all(np.isfinite(e)):
        raise QuadratureError("integration edges must be finite")
    total_width = e[-1] - e[0]
    a, b = e[:-1], e[1:]
    m = 0.5 * (a + b)
    # one-sided limits at the outer edges: jumps are only allowed there
    fa, fm, fb = f(np.nextafter(a, b)), f(m), f(np.nextafter(b, a))
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    parts: list[float] = []
    for _ in range(max_depth):
        if len(a) == 0:
            break
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
        right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
        diff = left + right - whole
        ok = np.abs(diff) <= 15.0 * tol * (b - a) / total_width
        # cells too narrow to split further are accepted as they stand
        ok |= (lm <= a) | (rm >= b)
        parts.extend((left + right + diff / 15.0)[ok].tolist())
        keep = ~ok
        a, m, b = a[keep], m[keep], b[keep]
        fa, fm, fb = fa[keep], fm[keep], fb[keep]
        lm, rm, flm, frm = lm[keep], rm[keep], flm[keep], frm[keep]
        left, right = left[keep], right[keep]
        # children: [a, m] with midpoint lm, [m, b] with midpoint rm
        a, m, b = np.concatenate((a, m)), np.concatenate((lm, rm)), np.concatenate((m, b))
        fa, fm, fb = np.concatenate((fa, fm)), np.concatenate((flm, frm)), np.concatenate((fm, fb))
        whole = np.concatenate((left, right))
    if len(a):
        raise QuadratureError(f"{len(a)} cells unresolved at depth {max_depth}")
    return math.fsum(parts)


def continuous_edges(dist: Distribution, extra: Iterable[float] = ()) -> list[float]:
    """Cell edges covering the continuous part of ``dist`` plus ``extra`` kinks."""
    pts = set(float(p) for p in dist.breakpoints())
    normals = _normal_parts(dist)
    for mu, sd in normals:
        pts.update((mu - EXPECT_SPAN * sd, mu + EXPECT_SPAN * sd))
    pts.update(float(x) for x in extra if math.isfinite(x))
    return sorted(pts)


def expectation(dist: Distribution, fn: Callable[[np.ndarray], np.ndarray],
                kinks: Iterable[float] = (), tol: float = 1e-11) -> float:
    """E_F[fn(Y)]: exact sum over atoms plus adaptive Simpson on the density.

    ``fn`` must accept a numpy array of observations.  ``kinks`` lists points
    where ``fn`` is non-smooth; placing them as cell edges is what makes the
    Simpson rule converge for indicator- and hinge-type scores.
    """
    atoms = dist.atoms()
    atom_part = 0.0
    if atoms:
        pts = np.array(sorted(atoms))
        vals = np.asarray(fn(pts), dtype=float)
        atom_part = math.fsum(atoms[float(p)] * v for p, v in zip(pts, vals) if atoms[float(p)] > 0)
    cont_mass = 1.0 - math.fsum(atoms.values())
    if cont_mass <= 1e-15:
        return atom_part
    edges = continuous_edges(dist, kinks)

    def integrand(y):
        d = dist.density(y)
        with np.errstate(invalid="ignore"):
            v = np.asarray(fn(y), dtype=float)
            return np.where(d > 0, v * d, 0.0)

    return atom_part + adaptive_simpson(integrand, edges, tol=tol)


__all__ = ["adaptive_simpson", "expectation", "continuous_edges", "QuadratureError"]
