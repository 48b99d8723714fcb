"""Acceptance criteria, each at its stated tolerance and time budget.

Every test prints one ``[criterion NN] PASS|FAIL`` line to the terminal and
then asserts the same verdict.
"""

import math
import time

import numpy as np
import pytest

from oracles import brute_force_argmin, normal_quantile
from setforecast.dist_core import (
    Dirac,
    Mixture,
    Normal,
    Uniform,
    is_pseudo_increasing,
    lower_quantile,
    mixture,
    prob_closed_interval,
    quantile_set,
    upper_quantile,
)
from setforecast.interval_family import Interval, IntervalFamily, gamma_alpha, prediction_family
from setforecast.interval_scores import PointMeasure, expected_normalized, murphy_expected
from setforecast.lab import gamma_lambda_demo, noninjective_demo, si_table_demo, wrapped_demo
from setforecast.quadrature import expectation
from setforecast.specified_intervals import (
    PinballSpec,
    fixed_left_score,
    pinball,
    qi_score,
    si1_expected,
    si_selective_ident,
    tail_weight,
)
from setforecast.vorobev import (
    Grid,
    GridRandomSet,
    GridSet,
    argmin_band,
    argmin_bruteforce,
    coverage_exact,
    elementary_vorobev,
    embed_1d_quantile,
    mixture_vorobev,
    score_normalized,
)


def report(capsys, number, title, ok, detail):
    with capsys.disabled():
        print(f"\n[criterion {number:02d}] {'PASS' if ok else 'FAIL'} {title}: {detail}")
    assert ok, detail


def test_c01_uniform_closed_form(capsys):
    grid = np.linspace(-3.0, 0.25, 1000)
    t0 = time.perf_counter()
    fam = prediction_family(Uniform(0, 1), 0.75, grid=grid)
    elapsed = time.perf_counter() - t0
    err = float(np.max(np.abs(fam.boundary(grid) - (np.maximum(grid, 0.0) + 0.75))))
    ok = err <= 1e-9 and elapsed < 0.1
    report(capsys, 1, "closed-form boundary", ok, f"max err {err:.2e}, {elapsed:.3f} s")


def random_inc_law(rng, alpha):
    while True:
        k = int(rng.integers(1, 4))
        comps = []
        for _ in range(k):
            if rng.uniform() < 0.7:
                comps.append(Normal(float(rng.normal(0, 2)), float(rng.uniform(0.4, 2.0))))
            else:
                lo = float(rng.normal(0, 2))
                comps.append(Uniform(lo, lo + float(rng.uniform(0.5, 3.0))))
        w = rng.dirichlet(np.ones(k))
        F = mixture(zip(w, comps))
        if is_pseudo_increasing(F, alpha):
            return F


def perturb(fam, rng, step):
    g = fam.gamma.copy()
    i, j = sorted(rng.choice(len(g), 2, replace=False))
    shift = float(rng.uniform(2.0, 4.0)) * step * float(rng.choice([-1.0, 1.0]))
    g[i:j + 1] = np.maximum(g[i:j + 1] + shift, fam.grid[i:j + 1])
    g = np.maximum.accumulate(g)
    return IntervalFamily(fam.grid, g, fam.domain_cut, min(fam.left_tail, g[0]))


def test_c02_exhaustive_consistency(capsys):
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    margins, grazing, n_cases = [], [], 0
    for alpha in (0.5, 0.75, 0.9):
        for _ in range(20):
            F = random_inc_law(rng, alpha)
            lo, hi = lower_quantile(F, 1e-3), upper_quantile(F, 1 - 1e-3)
            mu = PointMeasure.grid((lo, lo, hi, hi), 21)
            step = (hi - lo) / 20
            grid = np.union1d(np.linspace(lo - 1, hi + 1, 201), mu.points[:, 0])
            fam = prediction_family(F, alpha, grid=grid)
            u1, u2 = mu.points[:, 0], mu.points[:, 1]
            inA = fam.contains(u1, u2)
            with np.errstate(invalid="ignore"):
                far = np.abs(u2 - fam.boundary(u1)) >= step
            best = expected_normalized(fam, F, alpha, mu)
            done = 0
            while done < 50:
                other = perturb(fam, rng, step)
                diff = other.contains(u1, u2) != inA
                if not diff.any():
                    continue
                margin = expected_normalized(other, F, alpha, mu) - best
                # the differing region must hold an atom a full grid step off the true
                # boundary; atoms grazing it contribute w |p - alpha|, which can be tiny
                if not (diff & far).any():
                    grazing.append(margin)
                    continue
                margins.append(margin)
                done += 1
            n_cases += 1
    elapsed = time.perf_counter() - t0
    m = min(margins)
    ok = m > 1e-6 and elapsed < 30 and min(grazing, default=0.0) >= 0.0
    report(capsys, 2, "exhaustive consistency", ok,
           f"{n_cases} laws x 50 perturbations, min margin {m:.3e}, {elapsed:.1f} s; "
           f"{len(grazing)} boundary-grazing draws skipped (all >= 0, smallest "
           f"{min(grazing, default=math.nan):.1e})")


def test_c03_murphy_dominance(capsys):
    laws = [
        Uniform(0, 1),
        Normal(0, 1),
        Mixture((0.6, 0.4), (Normal(0, 1), Uniform(0.5, 2.5))),
        Mixture((0.3, 0.7), (Dirac(0.2), Uniform(-1, 1))),
        Mixture((0.5, 0.5), (Normal(-1, 0.5), Normal(1.5, 0.8))),
    ]
    alpha = 0.7
    mu = PointMeasure.grid((-2.5, -2.5, 3.0, 3.0), 15)
    u = mu.points
    grid = np.union1d(np.linspace(-4, 4, 161), u[:, 0])
    fams = [prediction_family(F, alpha, grid=grid) for F in laws]
    t0 = time.perf_counter()
    worst, ok = math.inf, True
    for k, F in enumerate(laws):
        table = murphy_expected(fams, F, alpha, u)
        gaps = table - table[k]
        worst = min(worst, float(gaps.min()))
        ok &= bool(np.all(table[k] <= table))
    elapsed = time.perf_counter() - t0
    ok = ok and elapsed < 5
    report(capsys, 3, "Murphy dominance", ok,
           f"5 laws x {len(u)} u-points, smallest alternative-minus-true {worst:.3e}, {elapsed:.2f} s")


def test_c04_noninjective(capsys):
    t0 = time.perf_counter()
    res = noninjective_demo(alpha=0.25, amplitudes=(0.0, 0.5, 1.0), n_windows=200, tol=1e-9)
    elapsed = time.perf_counter() - t0
    ok = res.passed and elapsed < 1
    report(capsys, 4, "non-injectivity", ok,
           f"max window err {res.details['max_err']:.2e}, families identical "
           f"{res.details['families_identical']}, {elapsed:.2f} s")


def test_c05_wrapped_sine(capsys):
    t0 = time.perf_counter()
    res = wrapped_demo(b=0.04, n=3, k=1, points=300, tol=1e-12)
    elapsed = time.perf_counter() - t0
    ok = res.passed and elapsed < 0.1
    report(capsys, 5, "wrapped sine", ok, f"max err {res.details['max_err']:.2e}, {elapsed:.3f} s")


def test_c06_si_dirac_table(capsys):
    t0 = time.perf_counter()
    res = si_table_demo(levels=(0.2, 0.5, 0.6, 0.9), n_lambda=21)
    elapsed = time.perf_counter() - t0
    rows = len(res.csv.splitlines()) - 1
    ok = res.passed and rows == 84 and elapsed < 1
    report(capsys, 6, "two-point shortest-interval table", ok, f"{rows} rows, {elapsed:.2f} s")


def test_c07_gamma_lambda(capsys):
    t0 = time.perf_counter()
    res = gamma_lambda_demo(alpha=0.5, affine_tol=1e-10)
    elapsed = time.perf_counter() - t0
    rows = res.details["rows"]
    ok = res.passed and len(rows) == 3 and all(r.violates for r in rows) and elapsed < 5
    parts = ", ".join(f"{r.name} g0={r.gammas[0]:.3g} g1={r.gammas[-1]:.3g} "
                      f"resid={r.affine_residual:.1e}" for r in rows)
    report(capsys, 7, "gamma(lambda) probe", ok, f"{parts}; {elapsed:.2f} s")


def test_c08_vorobev_argmin(capsys):
    rng = np.random.default_rng(8)
    t0 = time.perf_counter()
    ok, sizes, multi = True, [], 0
    for _ in range(50):
        n = int(rng.integers(1, 13))
        k = int(rng.integers(1, 5))
        # probabilities on eighths make coverage ties with alpha common
        cuts = np.sort(rng.choice(np.arange(1, 8), size=k - 1, replace=False)) if k > 1 else []
        probs = np.diff(np.concatenate(([0], cuts, [8]))) / 8.0
        atoms = tuple((float(p), GridSet.from_mask(rng.integers(0, 2, n))) for p in probs)
        Y = GridRandomSet(atoms)
        alpha = float(rng.integers(1, 8)) / 8.0 if rng.uniform() < 0.6 else float(rng.uniform())
        w = rng.choice([0.0, 0.5, 1.0, 3.0], size=n, p=[0.2, 0.3, 0.3, 0.2])
        grid = Grid(tuple(float(v) for v in w))
        brute = argmin_bruteforce(Y, alpha, grid)
        band = argmin_band(Y, alpha, grid)
        oracle = brute_force_argmin(coverage_exact(Y), w, alpha) if n <= 10 else None
        ok &= brute == band
        if oracle is not None:
            ok &= {frozenset(s.cells) for s in brute} == oracle
        sizes.append(n)
        multi += len(brute) > 1
    elapsed = time.perf_counter() - t0
    ok = ok and elapsed < 60
    report(capsys, 8, "Vorob'ev argmin band", ok,
           f"50 instances, n up to {max(sizes)}, {multi} with several minimizers, {elapsed:.1f} s")


def test_c09_vorobev_median(capsys):
    rng = np.random.default_rng(9)
    ok = True
    for _ in range(200):
        n = int(rng.integers(1, 30))
        X, Y = GridSet.from_mask(rng.integers(0, 2, n)), GridSet.from_mask(rng.integers(0, 2, n))
        grid = Grid(tuple(float(v) for v in rng.uniform(0, 5, n)))
        ok &= score_normalized(X, Y, 0.5, grid) == 0.5 * grid.weight(X.cells ^ Y.cells)
    report(capsys, 9, "median score is half the symmetric difference", ok, "200 instances, exact")


def test_c10_mixture_identity(capsys):
    rng = np.random.default_rng(10)
    ok = True
    for _ in range(100):
        n = int(rng.integers(1, 30))
        X, Y = GridSet.from_mask(rng.integers(0, 2, n)), GridSet.from_mask(rng.integers(0, 2, n))
        pi = [float(v) for v in rng.uniform(0, 5, n)]
        alpha = float(rng.uniform())
        lhs = mixture_vorobev(X, Y, alpha, pi)
        rhs = math.fsum(pi[u] * elementary_vorobev(X, Y, alpha, u) for u in range(n))
        ok &= lhs == rhs == score_normalized(X, Y, alpha, Grid(tuple(pi)))
    report(capsys, 10, "mixture representation", ok, "100 instances, bit-exact")


def test_c11_two_quantile_minimizer(capsys):
    F, alpha, beta = Normal(0, 1), 0.8, 0.1
    grid = np.linspace(-3, 3, 401)
    t0 = time.perf_counter()
    lo_spec = PinballSpec(beta, "identity", finite_moments=True)
    hi_spec = PinballSpec(alpha + beta, "identity", finite_moments=True)
    e_lo = np.array([expectation(F, lambda y: pinball(lo_spec, x, y), (x,), 1e-11) for x in grid])
    e_hi = np.array([expectation(F, lambda y: pinball(hi_spec, x, y), (x,), 1e-11) for x in grid])
    total = e_lo[:, None] + e_hi[None, :]
    total[grid[:, None] > grid[None, :]] = np.inf
    i, j = np.unravel_index(np.argmin(total), total.shape)
    # the expected qi score separates; confirm on a few pairs by direct quadrature
    sep_err = 0.0
    for a, b in [(10, 300), (50, 350), (120, 121)]:
        x = Interval(grid[a], grid[b])
        direct = expectation(F, lambda y: qi_score(x, y, alpha, beta, ("identity", "identity"),
                                                   finite_moments=True), (x.lo, x.hi), 1e-11)
        sep_err = max(sep_err, abs(direct - total[a, b]))
    elapsed = time.perf_counter() - t0
    q_lo, q_hi = normal_quantile(beta), normal_quantile(alpha + beta)
    h = grid[1] - grid[0]
    ok = (abs(grid[i] - q_lo) <= h and abs(grid[j] - q_hi) <= h and sep_err <= 1e-9
          and elapsed < 20)
    report(capsys, 11, "two-quantile minimizer", ok,
           f"argmin ({grid[i]:.4f}, {grid[j]:.4f}) vs ({q_lo:.4f}, {q_hi:.4f}), cell {h:.4f}, "
           f"separation err {sep_err:.1e}, {elapsed:.2f} s")


def test_c12_fixed_endpoint_minimizer(capsys):
    F = Mixture((0.2, 0.8), (Uniform(-1, 0), Uniform(0, 1)))
    alpha, a = 0.75, 0.0
    t0 = time.perf_counter()
    pts = np.linspace(0, 1.5, 400)
    h = tail_weight(pts)
    kinks = tuple(pts) + (-1.0, 0.0, 1.0)
    vals = [expectation(F, lambda y: fixed_left_score(x, y, alpha, a, h), kinks, 1e-10) for x in pts]
    best = float(pts[int(np.argmin(vals))])
    target = gamma_alpha(F, alpha, a)
    elapsed = time.perf_counter() - t0
    res = pts[1] - pts[0]
    ok = (abs(best - target) <= res and abs(target - lower_quantile(F, 0.95)) <= 1e-12
          and elapsed < 5)
    report(capsys, 12, "fixed-endpoint minimizer", ok,
           f"grid argmin {best:.5f} vs {target:.5f} (resolution {res:.5f}), {elapsed:.2f} s")


def test_c13_si1_infinite_score(capsys):
    F = Uniform(0, 1)
    los = [(i - 10) / 20 for i in range(21)]
    his = [(10 + j) / 20 for j in range(21)]
    ok, finite = True, []
    for lo in los:
        for hi in his:
            x = Interval(lo, hi)
            v = si1_expected(x, F)
            misses = prob_closed_interval(F, lo, hi) < 1.0
            ok &= (v == math.inf) == misses
            if math.isfinite(v):
                finite.append((v, lo, hi))
    finite.sort()
    unique = len(finite) >= 2 and finite[0][0] < finite[1][0]
    ok = ok and unique and finite[0][1:] == (0.0, 1.0)
    report(capsys, 13, "infinite score for full coverage", ok,
           f"{len(finite)} finite of 441, minimizer {finite[0][1:]}, unique {unique}")


def test_c14_si_selective_identification(capsys):
    F, alpha = Normal(0, 1), 0.5
    a_grid = np.linspace(-3, 3, 201)
    t0 = time.perf_counter()
    q = normal_quantile(0.75)
    vals, at0 = si_selective_ident(Interval(-q, q), F, alpha, a_grid)
    holds = bool(np.all(vals <= 1e-6)) and abs(at0) <= 1e-6
    svals, s0 = si_selective_ident(Interval(-q + 0.5, q + 0.5), F, alpha, a_grid)
    fails = s0 < -1e-6 or bool(np.any(svals > 1e-6))
    _, rounded0 = si_selective_ident(Interval(-0.6745, 0.6745), F, alpha, [0.0])
    elapsed = time.perf_counter() - t0
    ok = holds and fails and elapsed < 1
    report(capsys, 14, "shortest-interval identification", ok,
           f"central interval q={q:.7f}: value at 0 {at0:.1e}, max {vals.max():.1e}; "
           f"shifted value at 0 {s0:.3f}; 4-digit endpoints give {rounded0:.1e}; {elapsed:.2f} s")


def test_c15_one_dimensional_embedding(capsys):
    rng = np.random.default_rng(15)
    t = np.arange(-60, 61) / 20.0
    ok = True
    for _ in range(20):
        locs = rng.choice(t, size=int(rng.integers(1, 6)), replace=False)
        w = rng.dirichlet(np.ones(len(locs)))
        Z = Mixture(tuple(float(v) for v in w), tuple(Dirac(float(x)) for x in locs))
        alpha = float(rng.uniform(0.02, 0.98))
        q = quantile_set(Z, alpha).lower
        ok &= embed_1d_quantile(Z, alpha, t).cells == {i for i, v in enumerate(t) if v >= q}
    report(capsys, 15, "one-dimensional embedding", ok, "20 atom mixtures, exact on thresholds")
