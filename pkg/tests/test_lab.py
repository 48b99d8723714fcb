import math

import numpy as np
import pytest

from setforecast.dist_core import Mixture, Normal, Uniform, cdf, lower_quantile
from setforecast.interval_family import Interval, prediction_family, shortest_intervals
from setforecast.lab import (
    DEMOS,
    CandidateScore,
    MixturePath,
    consistency_scan,
    gamma_lambda_demo,
    gamma_lambda_probe,
    noninjective_demo,
    noninjective_density,
    proper_subset_demo,
    si_construction,
    si_dirac_expected,
    si_dirac_table,
    si_table_demo,
    wrapped_demo,
    wrapped_sine,
)
from setforecast.specified_intervals import PinballSpec, pinball


def test_noninjective_a0_is_uniform():
    F = noninjective_density(0.0, 0.25)
    for x in np.linspace(0, 1, 21):
        assert cdf(F, x) == pytest.approx(x, abs=1e-15)


def test_noninjective_windows_carry_alpha():
    F = noninjective_density(0.5, 0.25)
    knots = np.asarray(F.knots)
    for x in knots[knots <= 0.75 + 1e-12][::7]:
        assert cdf(F, x + 0.25) - cdf(F, x) == pytest.approx(0.25, abs=1e-12)
    assert np.ptp(F.densities) > 0.9


def test_noninjective_modulus_levels():
    F = noninjective_density(0.5, 0.4)
    assert set(np.round(F.densities, 12)) == {0.5, 1.5}
    knots = np.asarray(F.knots)
    for x in knots[knots <= 0.6 + 1e-12]:
        assert cdf(F, x + 0.4) - cdf(F, x) == pytest.approx(0.4, abs=1e-12)


@pytest.mark.parametrize("a, alpha", [(1.1, 0.25), (-0.1, 0.25), (0.5, 1.0)])
def test_noninjective_rejects_bad_parameters(a, alpha):
    with pytest.raises(ValueError):
        noninjective_density(a, alpha)


@pytest.mark.parametrize("alpha", [0.25, 0.4])
def test_noninjective_demo_passes(alpha):
    res = noninjective_demo(alpha)
    assert res.passed and res.details["families_identical"]
    assert res.csv.splitlines()[0] == "a,x,x_plus_alpha,abs_err"


def test_wrapped_sine():
    F = wrapped_sine(0.0, 3)
    assert cdf(F, 0.37) == pytest.approx(0.37, abs=1e-15)
    with pytest.raises(ValueError):
        wrapped_sine(1 / (2 * math.pi * 3), 3)
    res = wrapped_demo()
    assert res.passed and res.details["max_err"] <= 1e-12


def test_wrapped_identity_across_the_wrap():
    res = wrapped_demo(b=0.03, n=3, k=2, points=300)
    assert res.passed


def test_proper_subset_demo_strict_for_large_alpha():
    res = proper_subset_demo(0.75, c=1.8)
    assert res.passed and res.details["contained"] and res.details["strict"]
    assert res.details["c_range"] == pytest.approx((7 / 6, 2.5))


def test_proper_subset_demo_limit_case_flagged():
    res = proper_subset_demo(0.75, c=2.5)
    assert res.details["limit_case"] and res.details["contained"]
    assert not res.details["domain_strict"]


def test_proper_subset_demo_small_alpha():
    res = proper_subset_demo(0.05)
    assert res.passed and res.details["domain_strict"]


@pytest.mark.parametrize("level, lam, expected", [
    (0.3, 0.5, {(0.0, 0.0), (1.0, 1.0)}),
    (0.8, 0.5, {(0.0, 1.0)}),
    (0.8, 0.9, {(1.0, 1.0)}),
    (0.8, 0.1, {(0.0, 0.0)}),
    (0.3, 0.1, {(0.0, 0.0)}),
])
def test_si_dirac_examples(level, lam, expected):
    assert si_dirac_expected(level, lam) == expected
    [(l, got, want)] = si_dirac_table(level, [lam])
    assert got == want == expected


def test_si_table_demo():
    res = si_table_demo()
    assert res.passed
    assert len(res.csv.splitlines()) == 1 + 4 * 21


def test_mixture_path():
    path = MixturePath(Uniform(0, 1), Uniform(1, 2))
    assert cdf(path.at(0.5), 1.0) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        path.at(1.5)


def test_si_construction_endpoints():
    F0, F1, x0, x1 = si_construction(0.5)
    assert shortest_intervals(F0, 0.5).as_set() == {(0.0, 1.0)}
    assert (0.0, 2.0) in shortest_intervals(F1, 0.5).as_set()


def test_gamma_probe_affine_and_violating():
    rows, checks = gamma_lambda_probe(0.5)
    assert {r.name for r in rows} == {"winkler", "qi", "cone-normalized"}
    for r in rows:
        assert r.affine_residual <= 1e-10
        assert r.violates
    assert checks["x0_unique_in_si_F0"] and checks["x1_in_si_F1"]
    winkler = next(r for r in rows if r.name == "winkler")
    assert winkler.gammas[0] == pytest.approx(1.0, abs=1e-10)
    assert winkler.gammas[-1] == pytest.approx(1.5, abs=1e-10)


def test_gamma_probe_witness_for_negative_start():
    # width minus a coverage reward: gamma(0) = -1, gamma(1) = 1.5
    def fn(x, y):
        y = np.asarray(y, dtype=float)
        return (x.hi - x.lo) - 10.0 * ((y >= x.lo) & (y <= x.hi))

    rows, _ = gamma_lambda_probe(0.5, scores=[CandidateScore("reward", fn)])
    r = rows[0]
    assert r.gamma0_negative and r.affine_residual <= 1e-10
    assert r.root == pytest.approx(0.4, abs=1e-10)
    assert r.witness[0] == pytest.approx(0.2, abs=1e-10)
    assert r.witness[1] == pytest.approx(-0.5, abs=1e-10)
    assert r.violates


def test_gamma_lambda_demo():
    res = gamma_lambda_demo()
    assert res.passed
    assert res.csv.startswith("score,lambda,gamma\n")


MIXTURES = [
    Mixture((0.5, 0.5), (Normal(-1, 1), Normal(2, 0.5))),
    Mixture((0.3, 0.7), (Uniform(0, 1), Normal(1, 2))),
    Normal(0.5, 1.5),
]


def test_consistency_scan_pinball_quantile():
    spec = PinballSpec(0.3, "identity", finite_moments=True)
    report = consistency_scan(lambda F: lower_quantile(F, 0.3), lambda x, y: pinball(spec, x, y),
                              MIXTURES, list(np.linspace(-2, 2, 9)))
    assert report.violations == [] and report.ties == []
    assert report.n_checked == 27 and report.min_margin > 0


def test_consistency_scan_detects_wrong_functional():
    spec = PinballSpec(0.5, "identity", finite_moments=True)
    F = Mixture((0.8, 0.2), (Normal(0, 1), Normal(6, 1)))
    report = consistency_scan(lambda G: 1.2, lambda x, y: pinball(spec, x, y), [F], [0.0, 0.3])
    assert len(report.violations) >= 1


def test_consistency_scan_empty_candidates():
    report = consistency_scan(lambda F: 0.0, lambda x, y: np.zeros_like(y), MIXTURES, [])
    assert report.findings == () and report.n_checked == 0


def test_consistency_scan_flags_ties():
    report = consistency_scan(lambda F: Interval(0, 1), lambda x, y: np.zeros_like(np.asarray(y)),
                              [Normal(0, 1)], [Interval(0, 2)])
    assert len(report.ties) == 1


def test_demo_registry():
    assert set(DEMOS) == {"noninjective", "wrapped", "proper-subset", "si-table", "gamma-lambda"}


def test_prediction_family_equal_for_noninjective_pair():
    alpha = 0.25
    F1, F2 = noninjective_density(0.0, alpha), noninjective_density(0.7, alpha)
    grid = np.asarray(F1.knots)[np.asarray(F1.knots) <= 0.75 + 1e-12]
    f1 = prediction_family(F1, alpha, grid=grid)
    f2 = prediction_family(F2, alpha, grid=grid)
    assert np.array_equal(f1.gamma, f2.gamma)
