"""End-to-end acceptance checks, one test per criterion.

Each test prints a single ``ACCEPTANCE <n> ... PASS|FAIL`` line (visible with
``-s`` or in the captured output of a failure) before asserting.
"""

import math
import time

import numpy as np
import pytest

from lnemat.harness import CampaignConfig, run_campaign
from lnemat.matcore import make_point
from lnemat.oracle import cusp_ratio, sample_point
from lnemat.pathforge import closure_path, cone_path, product_path
from lnemat.strata import StratumSpec

ROOT2 = math.sqrt(2.0)
CLOSURE_LIMIT = 2 * ROOT2 * (1 + 1e-6)
SQRT2_LIMIT = ROOT2 * (1 + 1e-6)
STRATUM_LIMIT = 2 * ROOT2 * 1.05

GENERAL_SHAPES = [(2, 2, 1), (2, 3, 1), (3, 3, 1), (3, 3, 2), (4, 3, 2)]
CLOSURE_SPECS = [StratumSpec("general", f, m, n, r) for (m, n, r) in GENERAL_SHAPES for f in ("R", "C")]
CLOSURE_SPECS += [StratumSpec("sym", "R", 3, 3, 2), StratumSpec("skew", "R", 4, 4, 2)]

STRATUM_CASES = (
    [(StratumSpec("general", "R", n, n, n), lab) for n in (2, 3) for lab in ("DetSign(+1)", "DetSign(-1)")]
    + [(StratumSpec("sym", "R", 3, 3, 3), f"Signature({p},{3 - p})") for p in range(4)]
    + [(StratumSpec("skew", "R", 4, 4, 4), lab) for lab in ("PfaffianSign(+1)", "PfaffianSign(-1)")]
    + [(StratumSpec("general", "C", n, n, n), None) for n in (2, 3)]
)


def verdict(capsys, number, title, ok, detail):
    with capsys.disabled():
        print(f"\nACCEPTANCE {number:>2} {title}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, detail


@pytest.fixture(scope="module")
def closure_reports():
    t0 = time.perf_counter()
    reps = {}
    for s in CLOSURE_SPECS:
        reps[s] = run_campaign(CampaignConfig("verify-closure", s, trials=500, seed=42))
    return reps, time.perf_counter() - t0


def test_criterion_01_closure_bound(capsys, closure_reports):
    reps, elapsed = closure_reports
    worst, bad = 0.0, []
    for s, rep in reps.items():
        recs = rep.records
        ok = (len(recs) == 500 and all(r["status"] == "ok" for r in recs)
              and all(r["residual"] <= 1e-8 for r in recs)
              and max(r["ratio"] for r in recs) <= CLOSURE_LIMIT)
        worst = max(worst, rep.summary["max_ratio"])
        if not ok:
            bad.append(f"{s.space}/{s.field}/{s.m}x{s.n}/r{s.r}")
    ok = not bad and elapsed < 120.0
    verdict(capsys, 1, "closure bound 2*sqrt(2)", ok,
            f"{len(reps)} configs x 500 pairs, max ratio {worst:.4f}, {elapsed:.1f}s, failing {bad}")


def test_criterion_02_sqrt2_remark(capsys, closure_reports):
    reps, _ = closure_reports
    worst, bad = 0.0, []
    for s, rep in reps.items():
        if s.space != "general":
            continue
        vals = [r["ratio_sqrt2"] for r in rep.records]
        res = [r["residual_sqrt2"] for r in rep.records]
        worst = max(worst, max(vals))
        if len(vals) != 500 or max(vals) > SQRT2_LIMIT or max(res) > 1e-8:
            bad.append(f"{s.field}/{s.m}x{s.n}/r{s.r}")
    verdict(capsys, 2, "two-segment bound sqrt(2)", not bad, f"max ratio {worst:.6f}, failing {bad}")


def test_criterion_03_stratum_bound(capsys):
    worst, bad, total = 0.0, [], 0
    for s, label in STRATUM_CASES:
        opts = {} if label is None else {"label": label}
        rep = run_campaign(CampaignConfig("verify-stratum", s, trials=200, seed=7, options=opts))
        recs = rep.records
        total += len(recs)
        ok = (rep.summary["violations"] == 0 and rep.summary["numerical_failures"] == 0
              and all(r["label_constant"] for r in recs)
              and all(r["min_floor"] >= 1e-10 for r in recs)
              and max(r["ratio"] for r in recs) <= STRATUM_LIMIT)
        if label is not None:
            ok = ok and {r["label"] for r in recs} == {label}
        worst = max(worst, rep.summary["max_ratio"])
        if not ok:
            bad.append(f"{s.space}/{s.field}/{s.n}/{label}")
    verdict(capsys, 3, "stratum bound 2*sqrt(2)*1.05", not bad,
            f"{len(STRATUM_CASES)} components, {total} pairs, max ratio {worst:.4f}, failing {bad}")


def test_criterion_04_oracle(capsys):
    s = StratumSpec("general", "R", 2, 2, 1)
    rep = run_campaign(CampaignConfig("oracle", s, trials=100, seed=0, options={"cloud": 2000, "k": 12}))
    recs = [r for r in rep.records if r["status"] != "skipped"]
    lower_ok = all(r["oracle"] >= r["d_out"] for r in recs)
    ok = rep.passed and len(recs) == 100 and lower_ok and rep.summary["max_ratio"] <= STRATUM_LIMIT
    verdict(capsys, 4, "graph oracle cross-check", ok,
            f"max min(oracle, constructed)/d {rep.summary['max_ratio']:.4f}, "
            f"min oracle/d {rep.summary['min_oracle_ratio']:.4f}, {len(recs)} pairs")


def test_criterion_05_cusp(capsys):
    grid = [0.5, 0.25, 0.1, 0.05, 0.01]
    vals = [cusp_ratio(t) for t in grid]
    increasing = all(b > a for a, b in zip(vals, vals[1:]))
    ok = 19.0 <= cusp_ratio(0.05) <= 21.0 and increasing and cusp_ratio(0.01) > 90.0
    rep = run_campaign(CampaignConfig("cusp", options={"t_grid": grid}))
    ok = ok and rep.passed and rep.summary["verdict"] == "NOT-LNE"
    verdict(capsys, 5, "cusp counterexample", ok,
            "ratios " + ", ".join(f"{t}: {v:.3f}" for t, v in zip(grid, vals)))


def test_criterion_06_arrangements(capsys):
    details, ok = [], True
    for m in (2, 3, 4):
        rep = run_campaign(CampaignConfig("arrangement", trials=300, seed=m, len_tol=1e-9,
                                          options={"m": m, "radii": [10.0, 100.0, 1000.0]}))
        const = rep.summary["constant"]
        sharp = rep.summary["sharpness"][-1]
        random_ok = all(r["ratio"] <= ROOT2 * (1 + 1e-9) for r in rep.records)
        ok = ok and abs(const - ROOT2) <= 1e-12 and sharp >= 0.99 * ROOT2 and random_ok and rep.passed
        details.append(f"m={m}: K={const:.15f}, sharpness@1e3 {sharp:.6f}")
    verdict(capsys, 6, "arrangement constant sqrt(2)", ok, "; ".join(details))


def test_criterion_07_angles(capsys):
    rep = run_campaign(CampaignConfig("angle", trials=100, seed=0,
                                      options={"ambient": 6, "samples": 100_000, "angle_tol": 1e-3}))
    ok = rep.passed and len(rep.records) == 100
    verdict(capsys, 7, "principal angles vs sampled cosines", ok,
            f"max cos gap {rep.summary['max_gap']:.2e} over 100 pairs")


def test_criterion_08_transversality(capsys):
    t0 = time.perf_counter()
    fam = run_campaign(CampaignConfig("transversal", trials=20, options={"section": "cusp-family"}))
    rank_one = [r for r in fam.records if r.get("rank") == 1]
    fam_ok = bool(rank_one) and all(not r["transversal"] for r in rank_one)
    surf = run_campaign(CampaignConfig("transversal", trials=20, options={"section": "surface-j", "j_k": 3}))
    surf_ok = surf.passed and all(r["rank"] == 1 for r in surf.records)
    elapsed = time.perf_counter() - t0
    ok = fam_ok and surf_ok and elapsed < 5.0
    verdict(capsys, 8, "transversality checks", ok,
            f"family non-transversal at {len(rank_one)} rank-1 points, surface transversal at "
            f"{len(surf.records)} points, {elapsed:.2f}s")


def test_criterion_09_combinators(capsys):
    rng = np.random.default_rng(9)
    sx, sy = StratumSpec("general", "R", 2, 3, 1), StratumSpec("sym", "R", 3, 3, 2)
    worst_prod = 0.0
    prod_ok = True
    for _ in range(1000):
        px = closure_path(*(make_point(sample_point(sx, rng, int(rng.integers(0, 2)))) for _ in range(2)),
                          sx, certify_path=False)
        py = closure_path(*(make_point(sample_point(sy, rng, int(rng.integers(0, 3))), structure="sym")
                            for _ in range(2)), sy, certify_path=False)
        p = product_path(px, py)
        d = float(np.linalg.norm(p.end - p.start))
        if d == 0.0:
            continue
        ratio = p.total_length / d
        worst_prod = max(worst_prod, ratio / p.meta["bound"])
        prod_ok &= ratio <= p.meta["bound"] * (1 + 1e-9)
        prod_ok &= abs(p.total_length - px.total_length - py.total_length) <= 1e-10 * max(1.0, p.total_length)

    s1 = StratumSpec("general", "R", 2, 2, 1)

    def link(p, q):
        return closure_path(make_point(q), make_point(p), s1, certify_path=False)

    worst_cone, cone_ok = 0.0, True
    for _ in range(1000):
        x = sample_point(s1, rng, norm=rng.uniform(0.01, 5))
        y = sample_point(s1, rng, norm=rng.uniform(0.01, 5))
        p = cone_path(x, y, link)
        ratio = p.total_length / float(np.linalg.norm(x - y))
        worst_cone = max(worst_cone, ratio / p.meta["bound"])
        cone_ok &= ratio <= p.meta["bound"] * (1 + 1e-9)
    ok = bool(prod_ok and cone_ok)
    verdict(capsys, 9, "product and cone bounds", ok,
            f"max ratio/bound: product {worst_prod:.4f}, cone {worst_cone:.4f}")


DETERMINISM_CASES = [
    ("verify-closure", StratumSpec("general", "C", 4, 3, 2), {}),
    ("verify-stratum", StratumSpec("sym", "R", 3, 3, 3), {}),
    ("oracle", StratumSpec("general", "R", 2, 2, 1), {"cloud": 500}),
    ("arrangement", None, {"m": 3}),
    ("angle", None, {"samples": 5000}),
    ("classify", StratumSpec("skew", "R", 4, 4, 4), {}),
    ("transversal", None, {}),
    ("cusp", None, {}),
]


def test_criterion_10_determinism(capsys):
    def once(command, stratum, options, workers):
        return run_campaign(CampaignConfig(command, stratum, trials=25, seed=2024, workers=workers,
                                           options=dict(options))).canonical_bytes()

    differing = []
    for command, stratum, options in DETERMINISM_CASES:
        first = once(command, stratum, options, 1)
        if not first == once(command, stratum, options, 1) == once(command, stratum, options, 3):
            differing.append(command)
    verdict(capsys, 10, "determinism", not differing,
            f"{len(DETERMINISM_CASES)} campaigns re-run serially and with 3 workers, differing {differing}")
