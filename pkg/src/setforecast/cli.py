"""Command-line front end.

Exit codes: 0 success, 1 a check failed, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import lab
from .dist_core import load_distribution
from .interval_family import Interval, IntervalFamily, prediction_family, shortest_intervals
from .interval_scores import (
    PointMeasure,
    ScoreReport,
    calibration_stat,
    exhaustive_score,
    murphy_empirical,
    murphy_expected,
    normalized_score,
    v_selective,
    winkler_score,
)
from .specified_intervals import fixed_left_score, fixed_mid_score, fixed_right_score, qi_score, si1_score
from .vorobev import (
    MAX_BRUTE_FORCE_CELLS,
    Grid,
    GridRandomSet,
    GridSet,
    argmin_band,
    argmin_bruteforce,
    expected_score,
    read_weights,
    score_normalized,
    score_tilde,
    vorobev_sets,
)


class InputError(Exception):
    """Bad input file or flag combination; maps to exit code 2."""


INTERVAL_SCORES = ("selective", "qi", "winkler", "si1", "fixed-left", "fixed-right", "fixed-mid")
FAMILY_SCORES = ("normalized", "exhaustive")


# -- io helpers ------------------------------------------------------------

def _fmt(v: float) -> str:
    if v == math.inf:
        return "inf"
    if v == -math.inf:
        return "-inf"
    return repr(float(v))


def _num(s: str, where: str) -> float:
    try:
        v = float(s)
    except ValueError:
        raise InputError(f"{where}: non-numeric value {s!r}") from None
    if math.isnan(v):
        raise InputError(f"{where}: nan is not allowed")
    return v


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None


def _read_table(path: str, columns: tuple[str, ...]) -> list[tuple[int, dict]]:
    rows = list(csv.reader(_read_text(path).splitlines()))
    if not rows:
        raise InputError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    missing = [c for c in columns if c not in header]
    if missing:
        raise InputError(f"{path}:1: missing column(s) {', '.join(missing)}")
    out = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not any(cell.strip() for cell in row):
            continue
        if len(row) != len(header):
            raise InputError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
        out.append((lineno, {h: cell.strip() for h, cell in zip(header, row)}))
    return out


def read_forecasts(path: str) -> dict[str, Interval]:
    out = {}
    for lineno, rec in _read_table(path, ("case_id", "lo", "hi")):
        where = f"{path}:{lineno}"
        lo, hi = _num(rec["lo"], where), _num(rec["hi"], where)
        if lo > hi:
            raise InputError(f"{where}: lo exceeds hi")
        if rec["case_id"] in out:
            raise InputError(f"{where}: duplicate case_id {rec['case_id']!r}")
        out[rec["case_id"]] = Interval(lo, hi)
    return out


def read_observations(path: str) -> dict[str, float]:
    out = {}
    for lineno, rec in _read_table(path, ("case_id", "y")):
        where = f"{path}:{lineno}"
        if rec["case_id"] in out:
            raise InputError(f"{where}: duplicate case_id {rec['case_id']!r}")
        out[rec["case_id"]] = _num(rec["y"], where)
    return out


def read_manifest(path: str) -> dict[str, IntervalFamily]:
    """Lines ``case_id,path``; relative paths resolve against the manifest's folder."""
    base = Path(path).parent
    out = {}
    for lineno, line in enumerate(_read_text(path).splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 2:
            raise InputError(f"{path}:{lineno}: expected 'case_id,path'")
        if parts[0] == "case_id" and parts[1] == "path":
            continue
        fam_path = base / parts[1]
        try:
            out[parts[0]] = IntervalFamily.from_csv(_read_text(str(fam_path)))
        except ValueError as exc:
            raise InputError(f"{fam_path}: {exc}") from None
    if not out:
        raise InputError(f"{path}: manifest lists no cases")
    return out


def _aligned(forecasts: dict, obs: dict) -> list[str]:
    if set(forecasts) != set(obs):
        only_f = sorted(set(forecasts) - set(obs))
        only_o = sorted(set(obs) - set(forecasts))
        raise InputError(f"case ids differ: forecasts only {only_f[:5]}, observations only {only_o[:5]}")
    return sorted(obs, key=_case_key)


def _case_key(c: str):
    try:
        return (0, float(c), c)
    except ValueError:
        return (1, 0.0, c)


def write_output(text: str, out: str | None) -> None:
    """Write ``text`` to ``out`` atomically, or to stdout."""
    if out is None:
        sys.stdout.write(text)
        return
    target = Path(out)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _box(s: str | None) -> tuple[float, float, float, float] | None:
    if s is None:
        return None
    parts = s.split(",")
    if len(parts) != 4:
        raise InputError("--mu-box expects x0,y0,x1,y1")
    return tuple(_num(p, "--mu-box") for p in parts)


def _alpha(args, open_right: bool = False) -> float:
    a = args.alpha
    if a is None:
        raise InputError("--alpha is required")
    if not (0.0 < a < 1.0 if open_right else 0.0 < a <= 1.0):
        raise InputError(f"--alpha {a} out of range")
    return a


def _measure(args, default_box) -> PointMeasure:
    box = _box(args.mu_box) or default_box
    try:
        return PointMeasure.grid(box, args.mu_res)
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _families_box(fams) -> tuple[float, float, float, float]:
    pts = [v for f in fams for v in (*f.grid, *f.gamma, f.domain_cut, f.left_tail) if math.isfinite(v)]
    lo, hi = min(pts), max(pts)
    pad = 0.1 * (hi - lo) + 1.0
    return (lo - pad, lo - pad, hi + pad, hi + pad)


# -- subcommands -----------------------------------------------------------

def cmd_score(args) -> int:
    alpha = _alpha(args)
    obs = read_observations(args.obs)
    if args.score in FAMILY_SCORES:
        if not args.manifest:
            raise InputError(f"--score {args.score} needs --manifest with family forecasts")
        fams = read_manifest(args.manifest[0])
        ids = _aligned(fams, obs)
        mu = _measure(args, _families_box(fams.values()))
        fn = normalized_score if args.score == "normalized" else exhaustive_score
        scores = [fn(fams[c], obs[c], alpha, mu) for c in ids]
    else:
        if not args.forecasts:
            raise InputError(f"--score {args.score} needs --forecasts")
        fc = read_forecasts(args.forecasts)
        ids = _aligned(fc, obs)
        scores = [_interval_score(args, alpha, fc[c], obs[c]) for c in ids]
        if args.score == "selective" and len(ids) >= 2:
            mean, se = calibration_stat([fc[c] for c in ids], [obs[c] for c in ids], alpha)
            print(f"calibration: mean={mean:.6g} stderr={se:.6g} n={len(ids)}", file=sys.stderr)
    write_output(ScoreReport(tuple(ids), tuple(scores)).to_csv(), args.out)
    return 0


def _tail_atan(t):
    # mu with density 1/(1 + t^2): h(t) = mu([t, inf))
    return np.pi / 2.0 - np.arctan(np.asarray(t, dtype=float))


def _interval_score(args, alpha, x: Interval, y: float) -> float:
    s = args.score
    if s == "selective":
        return v_selective(x, y, alpha)
    if s == "qi":
        if args.beta is None:
            raise InputError("--score qi needs --beta")
        try:
            return qi_score(x, y, alpha, args.beta)
        except ValueError as exc:
            raise InputError(str(exc)) from None
    if s == "winkler":
        if alpha >= 1.0:
            raise InputError("winkler needs alpha < 1")
        return winkler_score(x, y, alpha)
    if s == "si1":
        return si1_score(x, y)
    if s == "fixed-left":
        # lo is the fixed endpoint, hi the report
        return fixed_left_score(x.hi, y, alpha, x.lo, _tail_atan)
    if s == "fixed-right":
        return fixed_right_score(x.lo, y, alpha, x.hi, _tail_atan)
    if s == "fixed-mid":
        return fixed_mid_score(0.5 * (x.hi - x.lo), y, 0.5 * (x.lo + x.hi), alpha, np.arctan)
    raise InputError(f"unknown score {s!r}")


def _u_grid(args, box) -> np.ndarray:
    box = _box(args.mu_box) or box
    try:
        return PointMeasure.grid(box, args.u_grid).points
    except ValueError as exc:
        raise InputError(str(exc)) from None


def cmd_murphy(args) -> int:
    alpha = _alpha(args)
    names, fam_lists = [], []
    if args.dist:
        F = _load_dist(args.dist)
        fams = []
        if args.include_true:
            names.append("true")
            fams.append(prediction_family(F, alpha))
        for p in args.family or []:
            names.append(Path(p).stem)
            try:
                fams.append(IntervalFamily.from_csv(_read_text(p)))
            except ValueError as exc:
                raise InputError(f"{p}: {exc}") from None
        if not fams:
            raise InputError("no forecasters: give --family files or --include-true")
        u = _u_grid(args, _families_box(fams))
        if args.include_true:
            # refine the true family so its boundary is exact at every u1
            grid = np.union1d(fams[0].grid, u[:, 0])
            fams[0] = prediction_family(F, alpha, grid=grid)
        table = murphy_expected(fams, F, alpha, u)
    else:
        if not args.manifest:
            raise InputError("no forecasters: give one --manifest per forecaster")
        if not args.obs:
            raise InputError("--obs is required without --dist")
        obs = read_observations(args.obs)
        ids = None
        for m in args.manifest:
            fams = read_manifest(m)
            ids = _aligned(fams, obs)
            names.append(Path(m).stem)
            fam_lists.append([fams[c] for c in ids])
        u = _u_grid(args, _families_box([f for fl in fam_lists for f in fl]))
        table = murphy_empirical(fam_lists, [obs[c] for c in ids], alpha, u)
    lines = [",".join(["u1", "u2", *names])]
    for k, (u1, u2) in enumerate(u):
        lines.append(",".join([_fmt(u1), _fmt(u2), *(_fmt(v) for v in table[:, k])]))
    write_output("\n".join(lines) + "\n", args.out)
    return 0


def _load_dist(path: str):
    try:
        return load_distribution(path)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    except (ValueError, KeyError, TypeError) as exc:
        raise InputError(f"{path}: invalid distribution config ({exc})") from None


def cmd_family(args) -> int:
    alpha = _alpha(args)
    F = _load_dist(args.dist)
    write_output(prediction_family(F, alpha, n=args.grid_n).to_csv(), args.out)
    return 0


def cmd_si(args) -> int:
    alpha = _alpha(args)
    F = _load_dist(args.dist)
    res = shortest_intervals(F, alpha)
    lines = ["lo,hi,length"] + [f"{_fmt(iv.lo)},{_fmt(iv.hi)},{_fmt(iv.length)}" for iv in res.intervals]
    write_output("\n".join(lines) + "\n", args.out)
    return 0


def _read_randset(path: str) -> GridRandomSet:
    try:
        return GridRandomSet.from_json(_read_text(path))
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from None


def _read_gridset(path: str) -> GridSet:
    try:
        return GridSet.from_text(_read_text(path))
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from None


def cmd_vorobev(args) -> int:
    if args.alpha is None or not 0.0 <= args.alpha <= 1.0:
        raise InputError("--alpha in [0, 1] is required")
    alpha = args.alpha
    Y = _read_randset(args.randset)
    if args.weights:
        try:
            grid = read_weights(_read_text(args.weights))
        except ValueError as exc:
            raise InputError(f"{args.weights}: {exc}") from None
    else:
        grid = Grid.counting(Y.n)
    if grid.n != Y.n:
        raise InputError(f"weights have {grid.n} cells, random set has {Y.n}")
    if args.action == "sets":
        q, gt, eq = vorobev_sets(Y, alpha)
        lines = ["set,mask"] + [f"{name},{' '.join(map(str, s.mask))}"
                                for name, s in (("Q_alpha", q), ("Q_gt", gt), ("Q_eq", eq))]
        write_output("\n".join(lines) + "\n", args.out)
        return 0
    if args.action == "score":
        if not args.grid:
            raise InputError("--action score needs --grid with the forecast set")
        X = _read_gridset(args.grid)
        if X.n != Y.n:
            raise InputError("forecast set and random set differ in size")
        tilde = expected_score(score_tilde, X, Y, alpha, grid)
        norm = expected_score(score_normalized, X, Y, alpha, grid)
        write_output(f"score,expected\ntilde,{_fmt(tilde)}\nnormalized,{_fmt(norm)}\n", args.out)
        return 0
    if Y.n > MAX_BRUTE_FORCE_CELLS:
        raise InputError(f"brute force limited to n <= {MAX_BRUTE_FORCE_CELLS}, got {Y.n}")
    found = argmin_bruteforce(Y, alpha, grid)
    band = argmin_band(Y, alpha, grid)
    lines = ["mask"] + sorted(" ".join(map(str, s.mask)) for s in found)
    write_output("\n".join(lines) + "\n", args.out)
    ok = found == band
    print(f"argmin: {len(found)} minimizers, matches band: {ok}", file=sys.stderr)
    return 0 if ok else 1


def cmd_demo(args) -> int:
    kw = {}
    name = args.name
    if name == "proper-subset":
        kw["alpha"] = _alpha(args, open_right=True)
        if args.c is not None:
            kw["c"] = args.c
    elif name == "si-table":
        levels = [v for v in (args.beta, args.gamma) if v is not None]
        if levels:
            kw["levels"] = levels
    elif name in ("noninjective", "gamma-lambda") and args.alpha is not None:
        kw["alpha"] = _alpha(args, open_right=True)
    elif name == "wrapped":
        if args.b is not None:
            kw["b"] = args.b
        if args.n is not None:
            kw["n"] = args.n
    try:
        res = lab.DEMOS[name](**kw)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    print(res.verdict)
    if args.out:
        write_output(res.csv, args.out)
    return 0 if res.passed else 1


def cmd_simulate(args) -> int:
    F = _load_dist(args.dist)
    if args.n < 1:
        raise InputError("--n must be positive")
    rng = np.random.default_rng(args.seed)
    ys = F.sample(rng, args.n)
    lines = ["case_id,y"] + [f"{i + 1},{_fmt(v)}" for i, v in enumerate(ys)]
    write_output("\n".join(lines) + "\n", args.out)
    return 0


# -- parser ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="setforecast",
                                description="Evaluate prediction-interval and Vorob'ev quantile forecasts.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--alpha", type=float)
        sp.add_argument("--out")

    def measure(sp):
        sp.add_argument("--mu-box", help="x0,y0,x1,y1 box for the grid measure on U; write --mu-box=... when x0 is negative")
        sp.add_argument("--mu-res", type=int, default=21)

    s = sub.add_parser("score", help="per-case and mean scores")
    common(s)
    measure(s)
    s.add_argument("--score", choices=INTERVAL_SCORES + FAMILY_SCORES, default="selective")
    s.add_argument("--beta", type=float)
    s.add_argument("--forecasts")
    s.add_argument("--obs", required=True)
    s.add_argument("--manifest", action="append")
    s.set_defaults(func=cmd_score)

    m = sub.add_parser("murphy", help="Murphy diagram of elementary scores")
    common(m)
    m.add_argument("--mu-box")
    m.add_argument("--u-grid", type=int, default=15)
    m.add_argument("--obs")
    m.add_argument("--manifest", action="append", help="one manifest per forecaster")
    m.add_argument("--dist", help="expected scores under this law instead of observations")
    m.add_argument("--family", action="append", help="family CSV (with --dist)")
    m.add_argument("--include-true", action="store_true", help="add the family of --dist")
    m.set_defaults(func=cmd_murphy)

    f = sub.add_parser("family", help="prediction-interval family of a law")
    common(f)
    f.add_argument("--dist", required=True)
    f.add_argument("--grid-n", type=int, default=201)
    f.set_defaults(func=cmd_family)

    si = sub.add_parser("si", help="shortest prediction intervals of a law")
    common(si)
    si.add_argument("--dist", required=True)
    si.set_defaults(func=cmd_si)

    v = sub.add_parser("vorobev", help="Vorob'ev quantiles, scores and argmin")
    common(v)
    v.add_argument("--randset", required=True)
    v.add_argument("--weights")
    v.add_argument("--grid", help="grid-set file with the forecast set")
    v.add_argument("--action", choices=("sets", "score", "argmin"), default="sets")
    v.set_defaults(func=cmd_vorobev)

    d = sub.add_parser("demo", help="run a lab demonstration")
    common(d)
    d.add_argument("name", choices=sorted(lab.DEMOS))
    d.add_argument("--beta", type=float, help="level <= 1/2 for si-table")
    d.add_argument("--gamma", type=float, help="level > 1/2 for si-table")
    d.add_argument("--c", type=float, help="right end of the wider uniform law")
    d.add_argument("--b", type=float, help="sine amplitude for wrapped")
    d.add_argument("--n", type=int, help="sine frequency for wrapped")
    d.set_defaults(func=cmd_demo)

    sm = sub.add_parser("simulate", help="draw observations from a law")
    common(sm)
    sm.add_argument("--dist", required=True)
    sm.add_argument("--n", type=int, default=100)
    sm.add_argument("--seed", type=int, required=True)
    sm.set_defaults(func=cmd_simulate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
