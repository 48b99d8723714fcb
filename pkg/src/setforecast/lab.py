"""Executable counterexamples and brute-force checks for interval functionals.

Each ``*_demo`` function returns a :class:`DemoResult` carrying a CSV table,
a one-line verdict and a pass flag, so the command line can print the
verdict, write the table and set its exit code.
"""

from __future__ import annotations

import io
import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .dist_core import (
    Dirac,
    Distribution,
    GridDensity,
    Uniform,
    cdf,
    mixture,
    prob_closed_interval,
)
from .interval_family import (
    Interval,
    IntervalFamily,
    family_contains,
    prediction_family,
    shortest_intervals,
)
from .interval_scores import winkler_score
from .quadrature import expectation
from .specified_intervals import qi_score


@dataclass(frozen=True)
class DemoResult:
    name: str
    passed: bool
    verdict: str
    csv: str
    details: dict = field(default_factory=dict)


def _to_csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_cell(v) for v in r])
    return buf.getvalue()


def _cell(v):
    if isinstance(v, float):
        if v == math.inf:
            return "inf"
        if v == -math.inf:
            return "-inf"
        return repr(v)
    return v


@dataclass(frozen=True)
class MixturePath:
    """Distributions ``(1 - lam) F0 + lam F1`` for ``lam`` in [0, 1]."""

    F0: Distribution
    F1: Distribution

    def at(self, lam: float) -> Distribution:
        if not 0.0 <= lam <= 1.0:
            raise ValueError(f"lambda={lam} outside [0, 1]")
        return mixture([(1.0 - lam, self.F0), (lam, self.F1)])


# -- distributions sharing one prediction family --------------------------

def noninjective_density(a: float, alpha: float, cells_per_period: int = 100) -> GridDensity:
    """Density on [0, 1] whose every length-alpha window carries mass alpha.

    When ``1/alpha`` is an integer ``n`` the density is ``1 - a cos(2 pi n y)``,
    discretized by exact cell integrals on knots aligned with the period.
    Otherwise the density is alpha-periodic; each period is split at
    ``beta = 1 mod alpha`` and each of the two pieces carries density
    ``1 - a`` on its lower half and ``1 + a`` on its upper half.  Both pieces
    then average to one, so every window of length alpha and the leftover
    piece ``[1 - beta, 1]`` keep their uniform mass.  At ``a = 1`` this
    density vanishes on whole cells, which flattens the CDF and moves the
    domain edge of the prediction family; use ``a < 1`` there.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha={alpha} outside (0, 1)")
    if not 0.0 <= a <= 1.0:
        raise ValueError(f"amplitude a={a} outside [0, 1]")
    n = round(1.0 / alpha)
    if abs(n * alpha - 1.0) <= 1e-12:
        m = n * cells_per_period
        knots = np.arange(m + 1) / m
        knots[-1] = 1.0
        # integral of 1 - a cos(2 pi n y) over each cell
        s = np.sin(2.0 * np.pi * n * knots)
        masses = np.diff(knots) - a * np.diff(s) / (2.0 * np.pi * n)
        return GridDensity.from_masses(knots, masses)
    periods = math.floor(1.0 / alpha)
    beta = 1.0 - periods * alpha
    cuts = []
    for k in range(periods + 1):
        o = k * alpha
        cuts.extend((o, o + beta / 2.0, o + beta))
        if k < periods:
            cuts.append(o + (alpha + beta) / 2.0)
    knots = np.array(sorted({c for c in cuts if c < 1.0 - 1e-12} | {1.0}))
    dens = []
    for lo, hi in zip(knots[:-1], knots[1:]):
        mid = 0.5 * (lo + hi)
        r = mid - alpha * math.floor(mid / alpha)
        piece_lo, piece_hi = (0.0, beta) if r < beta else (beta, alpha)
        dens.append(1.0 - a if r < 0.5 * (piece_lo + piece_hi) else 1.0 + a)
    return GridDensity(tuple(knots), tuple(dens))


def wrapped_sine(b: float, n: int, cells: int | None = None) -> GridDensity:
    """Law on [0, 1] with CDF ``y + b sin(2 pi n y)``, exact at the knots.

    The knots are ``cells`` equispaced points (default ``300 n``), so shifts
    by multiples of ``1/n`` map knots to knots.
    """
    if n < 1:
        raise ValueError("n must be a positive integer")
    if not 0.0 <= b < 1.0 / (2.0 * math.pi * n):
        raise ValueError(f"b={b} outside [0, 1/(2 pi n))")
    cells = cells or 300 * n
    knots = np.arange(cells + 1) / cells
    F = knots + b * np.sin(2.0 * np.pi * n * knots)
    F[0], F[-1] = 0.0, 1.0
    return GridDensity.from_masses(knots, np.diff(F))


def noninjective_demo(alpha: float = 0.25, amplitudes: Sequence[float] | None = None,
                      n_windows: int = 200, tol: float = 1e-9) -> DemoResult:
    if amplitudes is None:
        integer_case = abs(round(1.0 / alpha) * alpha - 1.0) <= 1e-12
        amplitudes = (0.0, 0.5, 1.0) if integer_case else (0.0, 0.5, 0.9)
    dists = [noninjective_density(a, alpha) for a in amplitudes]
    knots = np.asarray(dists[0].knots)
    starts = knots[knots <= 1.0 - alpha + 1e-12]
    idx = np.linspace(0, len(starts) - 1, min(n_windows, len(starts))).round().astype(int)
    xs = starts[idx]
    rows, worst = [], 0.0
    for a, F in zip(amplitudes, dists):
        for x in xs:
            end = knots[np.argmin(np.abs(knots - (x + alpha)))]
            err = abs(prob_closed_interval(F, x, end) - alpha)
            worst = max(worst, err)
            rows.append((a, float(x), float(end), err))
    grid = starts
    fams = [prediction_family(F, alpha, grid=grid) for F in dists]
    same = all(np.array_equal(f.gamma, fams[0].gamma) and np.array_equal(f.grid, fams[0].grid)
               and f.domain_cut == fams[0].domain_cut for f in fams[1:])
    ok = worst <= tol and same
    verdict = (f"noninjective alpha={alpha}: max window error {worst:.3e}, "
               f"families identical={same} -> {'PASS' if ok else 'FAIL'}")
    return DemoResult("noninjective", ok, verdict,
                      _to_csv(("a", "x", "x_plus_alpha", "abs_err"), rows),
                      {"max_err": worst, "families_identical": same})


def wrapped_demo(b: float = 0.04, n: int = 3, k: int = 1, points: int = 300,
                 tol: float = 1e-12) -> DemoResult:
    F = wrapped_sine(b, n)
    alpha = k / n
    ys = np.arange(points) / points
    rows, worst = [], 0.0
    for y in ys:
        if y + alpha <= 1.0:
            diff = cdf(F, y + alpha) - cdf(F, y)
        else:
            z = y + alpha - 1.0
            diff = (cdf(F, 1.0) - cdf(F, y)) + (cdf(F, z) - cdf(F, 0.0))
        err = abs(diff - alpha)
        worst = max(worst, err)
        rows.append((float(y), diff, err))
    ok = worst <= tol
    verdict = f"wrapped sine b={b} n={n}: max error {worst:.3e} -> {'PASS' if ok else 'FAIL'}"
    return DemoResult("wrapped", ok, verdict, _to_csv(("y", "window_mass", "abs_err"), rows),
                      {"max_err": worst})


# -- nested prediction families -------------------------------------------

def proper_subset_demo(alpha: float, c: float | None = None, b: float = -0.5,
                       n: int = 2001) -> DemoResult:
    """Two laws whose prediction families are strictly nested.

    For ``alpha >= 1/2`` the uniform law on [b, c] has a family inside that of
    the uniform law on [0, 1] when ``c`` lies in the admissible range; for
    ``alpha < 1/2`` the point mass at 0 has a family inside that of the
    two-point law with equal masses at 0 and 1.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha={alpha} outside (0, 1)")
    if alpha >= 0.5:
        c_lo = 1.0 - b * (1.0 - alpha) / alpha
        c_hi = 1.0 - b * alpha / (1.0 - alpha)
        c = 0.5 * (c_lo + c_hi) if c is None else c
        outer_law, inner_law = Uniform(0.0, 1.0), Uniform(b, c)
        bounds = (c_lo, c_hi)
    else:
        outer_law, inner_law = mixture([(0.5, Dirac(0.0)), (0.5, Dirac(1.0))]), Dirac(0.0)
        bounds = None
    lo = min(b, -1.0) - 1.0
    probe = np.linspace(lo, 2.0, n)
    outer = prediction_family(outer_law, alpha, grid=probe)
    inner = prediction_family(inner_law, alpha, grid=probe)
    pts = np.union1d(probe, [outer.domain_cut, inner.domain_cut])
    contained = family_contains(outer, inner, pts)
    domain_strict = inner.domain_cut < outer.domain_cut
    shared = pts[pts <= inner.domain_cut]
    gap = inner.boundary(shared) - outer.boundary(shared)
    strict = domain_strict or bool(np.any(gap > 1e-12))
    limit_case = bounds is not None and (abs(c - bounds[0]) <= 1e-12 or abs(c - bounds[1]) <= 1e-12)
    rows = [(float(a), float(gi), float(go)) for a, gi, go in
            zip(shared, inner.boundary(shared), outer.boundary(shared))]
    ok = contained and strict
    verdict = (f"proper-subset alpha={alpha}: contained={contained} strict={strict} "
               f"domain_strict={domain_strict} limit_case={limit_case} -> {'PASS' if ok else 'FAIL'}")
    return DemoResult("proper-subset", ok, verdict,
                      _to_csv(("a", "gamma_inner", "gamma_outer"), rows),
                      {"contained": contained, "strict": strict, "domain_strict": domain_strict,
                       "limit_case": limit_case, "c": c, "c_range": bounds})


# -- shortest intervals of two-point laws -----------------------------------

def dirac_path(lam: float) -> Distribution:
    """(1 - lam) delta_0 + lam delta_1."""
    return MixturePath(Dirac(0.0), Dirac(1.0)).at(lam)


def si_dirac_expected(level: float, lam: float) -> set[tuple[float, float]]:
    """Closed-form shortest intervals of the two-point law at weight ``lam``."""
    if not 0.0 < level <= 1.0:
        raise ValueError(f"level={level} outside (0, 1]")
    # regime edges such as 1 - 0.9 are not exact in binary; compare with slack
    eps = 1e-12
    if level <= 0.5:
        if lam < level - eps:
            return {(0.0, 0.0)}
        if lam <= 1.0 - level + eps:
            return {(0.0, 0.0), (1.0, 1.0)}
        return {(1.0, 1.0)}
    if lam <= 1.0 - level + eps:
        return {(0.0, 0.0)}
    if lam < level - eps:
        return {(0.0, 1.0)}
    return {(1.0, 1.0)}


def si_dirac_table(level: float, lambdas: Sequence[float]) -> list[tuple[float, set, set]]:
    return [(float(lam), shortest_intervals(dirac_path(lam), level).as_set(),
             si_dirac_expected(level, lam)) for lam in lambdas]


def si_table_demo(levels: Sequence[float] = (0.2, 0.5, 0.6, 0.9), n_lambda: int = 21) -> DemoResult:
    lambdas = np.linspace(0.0, 1.0, n_lambda)
    rows, ok = [], True
    for level in levels:
        for lam, got, want in si_dirac_table(level, lambdas):
            match = got == want
            ok &= match
            rows.append((level, lam, _fmt_set(got), _fmt_set(want), match))
    verdict = f"si-table levels={list(levels)}: {len(rows)} rows -> {'PASS' if ok else 'FAIL'}"
    return DemoResult("si-table", ok, verdict,
                      _to_csv(("level", "lambda", "computed", "closed_form", "match"), rows))


def _fmt_set(s) -> str:
    return " ".join(f"[{a:g},{b:g}]" for a, b in sorted(s))


# -- the gamma(lambda) argument -------------------------------------------

@dataclass(frozen=True)
class CandidateScore:
    """Selective interval score ``fn(x, y)`` vectorized in ``y``.

    ``kinks(x)`` lists points where ``fn(x, .)`` is non-smooth.
    """

    name: str
    fn: Callable[[Interval, np.ndarray], np.ndarray]
    kinks: Callable[[Interval], Sequence[float]] = lambda x: (x.lo, x.hi)


def cone_family(x: Interval) -> IntervalFamily:
    """All intervals containing ``x``: the cone ``x + (-inf, 0] x [0, inf)``."""
    return IntervalFamily(np.array([x.lo]), np.array([x.hi]), x.lo, x.hi)


def default_candidates(alpha: float, mu_box=(-1.0, -1.0, 6.0, 6.0), mu_res: int = 8
                       ) -> list[CandidateScore]:
    """Interval score, two-quantile score and cone-normalized score."""
    beta = 0.5 * (1.0 - alpha)
    g1 = np.linspace(mu_box[0], mu_box[2], mu_res)
    g2 = np.linspace(mu_box[1], mu_box[3], mu_res)
    uu1, uu2 = np.meshgrid(g1, g2, indexing="ij")
    keep = uu1 <= uu2
    u = np.column_stack((uu1[keep], uu2[keep]))
    w = np.full(len(u), 1.0 / len(u))
    coords = tuple(sorted(set(u.ravel().tolist())))

    def cone_score(x, y):
        y = np.atleast_1d(np.asarray(y, dtype=float))
        inA = cone_family(x).contains(u[:, 0], u[:, 1])
        inQ = (u[None, :, 0] <= y[:, None]) & (y[:, None] <= u[None, :, 1])
        per = np.where(inQ & ~inA, (1.0 - alpha), 0.0) + np.where(inA & ~inQ, alpha, 0.0)
        return per @ w

    return [
        CandidateScore("winkler", lambda x, y: winkler_score(x, y, alpha)),
        CandidateScore("qi", lambda x, y: qi_score(x, y, alpha, beta, ("identity", "identity"),
                                                  finite_moments=True)),
        CandidateScore("cone-normalized", cone_score, lambda x: coords),
    ]


def si_construction(alpha: float) -> tuple[Distribution, Distribution, Interval, Interval]:
    G1, G2, G3 = Uniform(0.0, 1.0), Uniform(1.0, 2.0), Uniform(3.0, 1.0 + 2.0 / alpha)
    F0 = mixture([(alpha, G1), (1.0 - alpha, G3)])
    F1 = mixture([(0.5 * alpha, G1), (0.5 * alpha, G2), (1.0 - alpha, G3)])
    return F0, F1, Interval(0.0, 1.0), Interval(0.0, 2.0)


def _expected(score: CandidateScore, x: Interval, F: Distribution, tol=1e-13) -> float:
    kinks = list(score.kinks(x)) + [x.lo, x.hi]
    val = expectation(F, lambda y: np.asarray(score.fn(x, y), dtype=float), kinks, tol)
    if not math.isfinite(val):
        raise ValueError(f"expected score of {score.name} is not finite")
    return val


@dataclass(frozen=True)
class ProbeRow:
    name: str
    lambdas: tuple[float, ...]
    gammas: tuple[float, ...]
    affine_residual: float
    gamma0_negative: bool
    positive_after_zero: bool
    root: float | None
    witness: tuple[float, float] | None

    @property
    def violates(self) -> bool:
        return not (self.gamma0_negative and self.positive_after_zero)


def gamma_lambda_probe(alpha: float, scores: Sequence[CandidateScore] | None = None,
                       lambdas: Sequence[float] | None = None,
                       sign_tol: float = 1e-12) -> tuple[list[ProbeRow], dict]:
    """gamma(lam) = E S(x0, F_lam) - E S(x1, F_lam) for each candidate score.

    A strictly consistent selective score would need gamma(0) < 0 and
    gamma(lam) > 0 for all lam > 0.  ``gamma`` is computed at every lambda by
    quadrature under the mixture itself and compared with the affine
    interpolation of its endpoint values.  When ``gamma(0) < 0`` the affine
    root ``lam*`` is located and ``gamma(lam*/2)`` is evaluated directly as a
    witness that positivity fails near zero.  Signs are decided with the
    margin ``sign_tol``, which dominates the quadrature error.
    """
    scores = default_candidates(alpha) if scores is None else scores
    lambdas = np.linspace(0.0, 1.0, 11) if lambdas is None else np.asarray(lambdas, dtype=float)
    F0, F1, x0, x1 = si_construction(alpha)
    path = MixturePath(F0, F1)

    def gamma(sc, lam):
        F = path.at(lam)
        return _expected(sc, x0, F) - _expected(sc, x1, F)

    rows = []
    for sc in scores:
        g = [gamma(sc, lam) for lam in lambdas]
        g0, g1 = gamma(sc, 0.0), gamma(sc, 1.0)
        resid = max(abs(v - ((1.0 - lam) * g0 + lam * g1)) for lam, v in zip(lambdas, g))
        neg0 = g0 < -sign_tol
        pos = all(v > sign_tol for lam, v in zip(lambdas, g) if lam > 0.0)
        root, witness = None, None
        if neg0:
            if g1 > 0.0:
                root = g0 / (g0 - g1)
                lam_w = 0.5 * root
            else:
                lam_w = 1.0
            witness = (lam_w, gamma(sc, lam_w))
            pos = pos and witness[1] > sign_tol
        rows.append(ProbeRow(sc.name, tuple(map(float, lambdas)), tuple(g), resid, neg0, pos,
                             root, witness))
    si0 = shortest_intervals(F0, alpha).as_set()
    si1 = shortest_intervals(F1, alpha).as_set()
    checks = {"si_F0": si0, "si_F1": si1,
              "x0_unique_in_si_F0": si0 == {x0.as_tuple()},
              "x1_in_si_F1": x1.as_tuple() in si1}
    return rows, checks


def gamma_lambda_demo(alpha: float = 0.5, affine_tol: float = 1e-10) -> DemoResult:
    rows, checks = gamma_lambda_probe(alpha)
    table = []
    for r in rows:
        for lam, g in zip(r.lambdas, r.gammas):
            table.append((r.name, lam, g))
    ok = (all(r.affine_residual <= affine_tol and r.violates for r in rows)
          and checks["x0_unique_in_si_F0"] and checks["x1_in_si_F1"])
    parts = [f"{r.name}: resid={r.affine_residual:.1e} gamma0<0={r.gamma0_negative} "
             f"positive={r.positive_after_zero}" for r in rows]
    verdict = f"gamma-lambda alpha={alpha}: " + "; ".join(parts) + f" -> {'PASS' if ok else 'FAIL'}"
    return DemoResult("gamma-lambda", ok, verdict, _to_csv(("score", "lambda", "gamma"), table),
                      {"rows": rows, "checks": checks})


# -- generic consistency scanner ------------------------------------------

def _kinks_of(x) -> list[float]:
    if isinstance(x, Interval):
        return [x.lo, x.hi]
    if np.ndim(x) == 0:
        return [float(x)]
    return [float(v) for v in np.ravel(x)]


@dataclass(frozen=True)
class ScanFinding:
    dist_index: int
    candidate: object
    target: object
    score_candidate: float
    score_target: float
    kind: str  # "violation" (candidate strictly better) or "tie"


@dataclass(frozen=True)
class ScanReport:
    findings: tuple[ScanFinding, ...]
    n_checked: int
    min_margin: float

    @property
    def violations(self) -> list[ScanFinding]:
        return [f for f in self.findings if f.kind == "violation"]

    @property
    def ties(self) -> list[ScanFinding]:
        return [f for f in self.findings if f.kind == "tie"]


def consistency_scan(functional: Callable[[Distribution], object],
                     score: Callable[[object, np.ndarray], np.ndarray],
                     family: Sequence[Distribution], candidates: Sequence[object],
                     tol: float = 1e-8, same: Callable[[object, object], bool] | None = None,
                     quad_tol: float = 1e-12) -> ScanReport:
    """Compare expected scores of candidates with that of the functional's value.

    A candidate scoring more than ``tol`` below the target is a consistency
    violation; a candidate distinct from the target (per ``same``) whose
    expected score is within ``tol`` is a strictness violation (tie).
    ``min_margin`` is the smallest candidate-minus-target difference seen.
    """
    same = same or (lambda a, b: bool(np.allclose(_kinks_of(a), _kinks_of(b), atol=1e-12)))
    findings, n, margin = [], 0, math.inf
    for i, F in enumerate(family):
        target = functional(F)
        t_score = expectation(F, lambda y: np.asarray(score(target, y), dtype=float),
                              _kinks_of(target), quad_tol)
        for c in candidates:
            n += 1
            c_score = expectation(F, lambda y: np.asarray(score(c, y), dtype=float),
                                  _kinks_of(c) + _kinks_of(target), quad_tol)
            d = c_score - t_score
            if same(c, target):
                continue
            margin = min(margin, d)
            if d < -tol:
                findings.append(ScanFinding(i, c, target, c_score, t_score, "violation"))
            elif abs(d) <= tol:
                findings.append(ScanFinding(i, c, target, c_score, t_score, "tie"))
    return ScanReport(tuple(findings), n, margin)


DEMOS = {
    "noninjective": noninjective_demo,
    "wrapped": wrapped_demo,
    "proper-subset": proper_subset_demo,
    "si-table": si_table_demo,
    "gamma-lambda": gamma_lambda_demo,
}
