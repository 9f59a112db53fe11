"""Randomized verification campaigns.

Every campaign takes a :class:`CampaignConfig` and returns an
:class:`ExperimentReport`.  Trial ``i`` draws all of its randomness from
``trial_rng(seed, i)``, so reports do not depend on execution order or on the
number of workers.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from ..arrangements import (
    AffineSubspace,
    arrangement_constant,
    arrangement_path,
    load_arrangement,
    sampled_cos_sup,
    sharpness_points,
    subspace_angle,
    triangular_det0,
)
from ..errors import InputError, NumericalError, PreconditionError
from ..matcore import frobenius_dist, load_point, make_point, numerical_rank
from ..oracle import (
    build_graph,
    cusp_arc_length_quad,
    cusp_cloud,
    cusp_family_section,
    cusp_family_tangents,
    cusp_points,
    cusp_ratio,
    graph_inner_distance,
    sample_point,
    sample_stratum,
    surface_j,
    surface_j_tangents,
)
from ..pathforge import closure_path, closure_path_sqrt2, stratum_path
from ..strata import (
    classify_array,
    component_labels,
    parse_label,
    same_component,
    transversality_report,
)
from .report import ExperimentReport, summarize, trial_rng

CLOSURE_BOUND = 2.0 * math.sqrt(2.0)
SQRT2_BOUND = math.sqrt(2.0)
NORM_RANGE = (0.1, 1.0)
RESAMPLE_LIMIT = 50
NOT_LNE_THRESHOLD = 10.0
DEFAULT_T_GRID = (1.0, 0.5, 0.2, 0.1, 0.05, 0.02, 0.01)


def _map_trials(cfg, fn, count=None):
    n = cfg.trials if count is None else count
    if cfg.workers > 1:
        with ThreadPoolExecutor(cfg.workers) as pool:
            return list(pool.map(fn, range(n)))
    return [fn(i) for i in range(n)]


def _finish(cfg, records, bound, t0, extra=None):
    summary = summarize(records, bound, time.perf_counter() - t0, extra)
    return ExperimentReport(cfg.to_json(), records, summary)


def _ratio(length, d):
    return 1.0 if d == 0.0 else length / d


def _require_stratum(cfg):
    if cfg.stratum is None:
        raise InputError(f"{cfg.command} needs a stratum (space, field, m, n, r)")
    return cfg.stratum


def _random_rank(s, rng):
    ranks = list(range(0, s.r + 1, 2 if s.space == "skew" else 1))
    return int(rng.choice(ranks))


def _numerical_record(trial, exc, **fields):
    rec = {"trial": trial, "status": "numerical_failure", "error": str(exc)}
    rec.update(fields)
    return rec


# --- closure -------------------------------------------------------------------------

def run_verify_closure(cfg):
    """Random pairs in the closure ``{rank <= r}``; ranks of the endpoints are mixed."""
    s = _require_stratum(cfg).with_mode("closure")
    bound = CLOSURE_BOUND if cfg.bound is None else cfg.bound
    limit = bound * (1.0 + cfg.len_tol)
    t0 = time.perf_counter()

    def trial(i):
        rng = trial_rng(cfg.seed, i)
        ka, kb = _random_rank(s, rng), _random_rank(s, rng)
        a = make_point(sample_point(s, rng, ka, norm=rng.uniform(*NORM_RANGE)), s.field, s.space)
        b = make_point(sample_point(s, rng, kb, norm=rng.uniform(*NORM_RANGE)), s.field, s.space)
        d = frobenius_dist(a, b)
        rec = {"trial": i, "rank_a": ka, "rank_b": kb, "d_out": d}
        try:
            path = closure_path(a, b, s, cfg.rank_tol, cfg.cert_tol)
        except NumericalError as exc:
            return _numerical_record(i, exc, **rec)
        cert = path.certificate
        rec.update(length=path.total_length, ratio=_ratio(path.total_length, d),
                   residual=0.0 if cert is None else cert.max_offstratum_residual)
        ok = rec["ratio"] <= limit
        if s.space == "general":
            try:
                p2 = closure_path_sqrt2(a, b, s, cfg.rank_tol, cfg.cert_tol)
            except NumericalError as exc:
                return _numerical_record(i, exc, **rec)
            rec.update(length_sqrt2=p2.total_length, ratio_sqrt2=_ratio(p2.total_length, d),
                       residual_sqrt2=0.0 if p2.certificate is None
                       else p2.certificate.max_offstratum_residual)
            ok = ok and rec["ratio_sqrt2"] <= SQRT2_BOUND * (1.0 + cfg.len_tol)
        rec["status"] = "ok" if ok else "violation"
        return rec

    records = _map_trials(cfg, trial)
    if cfg.emit_samples:
        _emit_first_path(cfg, lambda a, b: closure_path(a, b, s, cfg.rank_tol, cfg.cert_tol),
                         s, closure=True)
    extra = {}
    if s.space == "general":
        r2 = [r["ratio_sqrt2"] for r in records if "ratio_sqrt2" in r]
        extra = {"max_ratio_sqrt2": max(r2) if r2 else None, "bound_sqrt2": SQRT2_BOUND}
    return _finish(cfg, records, bound, t0, extra)


def _emit_first_path(cfg, build, s, closure):
    """Export the path of a fresh pair drawn from trial 0's stream."""
    rng = trial_rng(cfg.seed, 0)
    if closure:
        a = sample_point(s, rng, _random_rank(s, rng), norm=rng.uniform(*NORM_RANGE))
        b = sample_point(s, rng, _random_rank(s, rng), norm=rng.uniform(*NORM_RANGE))
    else:
        a, b = _same_component_pair(s, rng, _label_option(cfg))
    build(make_point(a, s.field, s.space), make_point(b, s.field, s.space)).export(cfg.emit_samples)


# --- stratum -------------------------------------------------------------------------

def _label_option(cfg):
    text = cfg.options.get("label")
    if text is None:
        return None
    label = parse_label(text)
    if label not in component_labels(cfg.stratum.with_mode("stratum")):
        raise InputError(f"{text} is not a component of this stratum")
    return label


def _same_component_pair(s, rng, label):
    """Two points of ``X_r`` in one component; ``b`` is resampled until it matches."""
    if label is None:
        label = component_labels(s)[int(rng.integers(len(component_labels(s))))]
    a = sample_point(s, rng, s.r, label, norm=rng.uniform(*NORM_RANGE))
    for _ in range(RESAMPLE_LIMIT):
        b = sample_point(s, rng, s.r, label, norm=rng.uniform(*NORM_RANGE))
        if same_component(a, b, s):
            return a, b
    raise NumericalError("could not draw a second point in the same component")


def run_verify_stratum(cfg):
    """Random same-component pairs in ``X_r``; paths must stay in ``X_r``."""
    s = _require_stratum(cfg).with_mode("stratum")
    label = _label_option(cfg)
    bound = CLOSURE_BOUND if cfg.bound is None else cfg.bound
    limit = bound * (1.0 + cfg.stratum_slack)
    t0 = time.perf_counter()

    def trial(i):
        rng = trial_rng(cfg.seed, i)
        try:
            a, b = _same_component_pair(s, rng, label)
        except NumericalError as exc:
            return _numerical_record(i, exc)
        d = float(np.linalg.norm(a - b))
        rec = {"trial": i, "label": str(classify_array(a, s)), "d_out": d}
        try:
            path = stratum_path(a, b, s, seed=int(rng.integers(2 ** 32)), rank_tol=cfg.rank_tol)
        except NumericalError as exc:
            return _numerical_record(i, exc, **rec)
        cert = path.certificate
        rec.update(length=path.total_length, ratio=_ratio(path.total_length, d),
                   residual=None if cert is None else cert.max_offstratum_residual,
                   min_floor=None if cert is None else cert.min_floor,
                   label_constant=True if cert is None else cert.label_constant,
                   attempts=path.meta.get("attempts", 0))
        ok = rec["ratio"] <= limit and (cert is None or cert.valid)
        rec["status"] = "ok" if ok else "violation"
        return rec

    records = _map_trials(cfg, trial)
    if cfg.emit_samples:
        _emit_first_path(cfg, lambda a, b: stratum_path(a, b, s, rank_tol=cfg.rank_tol), s,
                         closure=False)
    return _finish(cfg, records, bound, t0, {"limit": limit})


# --- graph oracle ----------------------------------------------------------------------

def run_oracle_compare(cfg):
    """Constructed closure paths against k-NN graph distances on a sampled cloud."""
    s = _require_stratum(cfg).with_mode("closure")
    size = int(cfg.options.get("cloud", 2000))
    k = int(cfg.options.get("k", 12))
    bound = CLOSURE_BOUND if cfg.bound is None else cfg.bound
    limit = bound * (1.0 + cfg.oracle_slack)
    t0 = time.perf_counter()
    cloud = sample_stratum(s, size, radius=1.0, seed=cfg.seed)
    graph = build_graph(cloud, k)

    def trial(i):
        rng = trial_rng(cfg.seed, i)
        a = sample_point(s, rng, _random_rank(s, rng), norm=rng.uniform(0.2, 0.9))
        b = sample_point(s, rng, _random_rank(s, rng), norm=rng.uniform(0.2, 0.9))
        d = float(np.linalg.norm(a - b))
        rec = {"trial": i, "d_out": d}
        oracle = graph_inner_distance(graph, a, b)
        rec["oracle"] = oracle
        try:
            path = closure_path(make_point(a, s.field, s.space), make_point(b, s.field, s.space),
                                s, cfg.rank_tol, cfg.cert_tol)
        except NumericalError as exc:
            return _numerical_record(i, exc, **rec)
        rec["constructed"] = path.total_length
        if not math.isfinite(oracle):
            rec.update(ratio=_ratio(path.total_length, d), status="skipped")
            return rec
        rec["oracle_ratio"] = _ratio(oracle, d)
        rec["ratio"] = _ratio(min(oracle, path.total_length), d)
        consistent = oracle >= d * (1.0 - 1e-12)
        rec["status"] = "ok" if consistent and rec["ratio"] <= limit else "violation"
        return rec

    records = _map_trials(cfg, trial)
    if cfg.emit_samples:
        cloud.export(cfg.emit_samples)
    oracle_ratios = [r["oracle_ratio"] for r in records if "oracle_ratio" in r]
    extra = {"cloud_size": size, "k": k, "edges": int(len(graph.weights)), "limit": limit,
             "min_oracle_ratio": min(oracle_ratios) if oracle_ratios else None}
    return _finish(cfg, records, bound, t0, extra)


# --- cusp counterexample -------------------------------------------------------------

def run_cusp(cfg):
    """Inner/outer ratios on the cusp ``x^3 = y^2`` at the pairs ``(t^2, +-t^3)``.

    The closed-form arc length is cross-checked against quadrature and a k-NN
    graph on a curve cloud.  A check fails when the two arc lengths disagree or
    the ratios fail to increase as ``t`` shrinks.  Ratios above the threshold
    are flagged NOT-LNE.
    """
    grid = [float(t) for t in cfg.options.get("t_grid", DEFAULT_T_GRID)]
    if any(not 0.0 < t <= 1.0 for t in grid):
        raise InputError("t values must lie in (0, 1]")
    grid = sorted(set(grid), reverse=True)
    size = int(cfg.options.get("cloud", 4001))
    k = int(cfg.options.get("k", 2))
    t0 = time.perf_counter()
    graph = build_graph(cusp_cloud(size), k)
    records, prev = [], 0.0
    for i, t in enumerate(grid):
        ratio = cusp_ratio(t)
        quad_ratio = cusp_arc_length_quad(t) / t ** 3
        a, b = cusp_points(t)
        d = 2.0 * t ** 3
        rec = {"trial": i, "t": t, "d_out": d, "ratio": ratio, "ratio_quad": quad_ratio,
               "graph_ratio": graph_inner_distance(graph, a, b) / d,
               "flag": "NOT-LNE" if ratio > NOT_LNE_THRESHOLD else ""}
        ok = abs(ratio - quad_ratio) <= 1e-8 * ratio and ratio > prev
        rec["status"] = "ok" if ok else "violation"
        prev = ratio
        records.append(rec)
    flagged = [r["t"] for r in records if r["flag"]]
    extra = {"not_lne": bool(flagged), "flagged_t": flagged, "threshold": NOT_LNE_THRESHOLD,
             "verdict": "NOT-LNE" if flagged else "undecided"}
    return _finish(cfg, records, None, t0, extra)


# --- arrangements --------------------------------------------------------------------

def _arrangement_option(cfg):
    if cfg.options.get("arrangement"):
        return load_arrangement(cfg.options["arrangement"])
    return triangular_det0(int(cfg.options.get("m", 3)))


def run_arrangement(cfg):
    """Two-leg paths between random points of two subspaces, plus a sharpness sweep."""
    arr = _arrangement_option(cfg)
    if len(arr) < 2:
        raise InputError("the campaign needs at least two subspaces")
    const = arrangement_constant(arr)
    bound = const if cfg.bound is None else cfg.bound
    limit = bound * (1.0 + cfg.len_tol)
    t0 = time.perf_counter()
    subs = arr.subspaces

    def trial(i):
        rng = trial_rng(cfg.seed, i)
        pi, pj = (int(v) for v in rng.choice(len(subs), size=2, replace=False))
        scale = 10.0 ** rng.uniform(-1.0, 2.0)
        x = subs[pi].base + subs[pi].directions @ (scale * rng.standard_normal(subs[pi].dim))
        y = subs[pj].base + subs[pj].directions @ (scale * rng.standard_normal(subs[pj].dim))
        path = arrangement_path(x, y, arr, pi, pj)
        d = float(np.linalg.norm(x - y))
        ratio = _ratio(path.total_length, d)
        return {"trial": i, "kind": "random", "pair": [pi, pj], "d_out": d,
                "length": path.total_length, "ratio": ratio,
                "status": "ok" if ratio <= limit else "violation"}

    records = _map_trials(cfg, trial)
    radii = [float(v) for v in cfg.options.get("radii", (1.0, 10.0, 100.0, 1000.0))]
    sweep_rng = trial_rng(cfg.seed, cfg.trials)
    sharp = []
    for k, rad in enumerate(radii):
        x, y, pair = sharpness_points(arr, rad, sweep_rng)
        path = arrangement_path(x, y, arr, *pair)
        ratio = _ratio(path.total_length, float(np.linalg.norm(x - y)))
        sharp.append(ratio)
        rec = {"trial": cfg.trials + k, "kind": "sharpness", "radius": rad, "pair": list(pair),
               "ratio": ratio, "status": "ok" if ratio <= limit else "violation"}
        if k == len(radii) - 1 and ratio < 0.99 * const:
            rec["status"] = "violation"
        records.append(rec)
    extra = {"constant": const, "sharpness": sharp, "subspaces": len(arr)}
    return _finish(cfg, records, bound, t0, extra)


def _random_subspace_pair(rng, ambient):
    """Two subspaces through a common point meeting exactly in a random flat."""
    k = int(rng.integers(0, 3))
    q1, q2 = int(rng.integers(1, 3)), int(rng.integers(1, 3))
    while k + q1 + q2 > ambient:
        k = max(0, k - 1)
        q1, q2 = 1, 1
    basis, _ = np.linalg.qr(rng.standard_normal((ambient, k + q1 + q2)))
    w = basis[:, :k]
    v1 = basis[:, k:k + q1]
    # mix the second quotient block with the first so the angle is not always pi/2
    mix = rng.standard_normal((q1, q2)) * rng.uniform(0.0, 3.0)
    v2 = basis[:, k + q1:] + v1 @ mix
    p = rng.standard_normal(ambient)
    l1 = AffineSubspace.spanned(p, np.hstack([w, v1]))
    l2 = AffineSubspace.spanned(p, np.hstack([w, v2]))
    return l1, l2, k


def run_angle(cfg):
    """Principal-angle cosines against the sampled sup-of-cosines definition."""
    ambient = int(cfg.options.get("ambient", 6))
    samples = int(cfg.options.get("samples", 100_000))
    tol = float(cfg.options.get("angle_tol", 1e-3))
    if ambient < 2:
        raise InputError("ambient dimension must be at least 2")
    t0 = time.perf_counter()

    def trial(i):
        rng = trial_rng(cfg.seed, i)
        l1, l2, k = _random_subspace_pair(rng, ambient)
        res = subspace_angle(l1, l2)
        sampled = sampled_cos_sup(l1, l2, samples, rng)
        gap = res.cos_alpha - sampled
        ok = -1e-9 <= gap <= tol
        return {"trial": i, "dims": [l1.dim, l2.dim], "intersection_dim": k,
                "alpha": res.alpha, "cos_alpha": res.cos_alpha, "cos_sampled": sampled,
                "gap": gap, "status": "ok" if ok else "violation"}

    records = _map_trials(cfg, trial)
    gaps = [r["gap"] for r in records]
    return _finish(cfg, records, None, t0, {"max_gap": max(gaps), "tolerance": tol})


# --- classification ------------------------------------------------------------------

def run_classify(cfg):
    """Sample each component by construction and check the classifier recovers it."""
    s = _require_stratum(cfg).with_mode("stratum")
    labels = component_labels(s)
    t0 = time.perf_counter()

    def trial(i):
        rng = trial_rng(cfg.seed, i)
        want = labels[int(rng.integers(len(labels)))]
        x = sample_point(s, rng, s.r, want, norm=rng.uniform(*NORM_RANGE))
        got = classify_array(x, s, cfg.rank_tol)
        return {"trial": i, "expected": str(want), "label": str(got),
                "status": "ok" if got == want else "violation"}

    records = _map_trials(cfg, trial)
    hist = {str(lab): 0 for lab in labels}
    for r in records:
        hist[r["label"]] = hist.get(r["label"], 0) + 1
    return _finish(cfg, records, None, t0, {"components": hist})


# --- transversality ------------------------------------------------------------------

def _section_points(cfg):
    """(point, tangent basis) pairs on the requested section's singular locus."""
    name = cfg.options.get("section", "cusp-family")
    count = cfg.trials
    if name == "cusp-family":
        tangents = cusp_family_tangents()
        out = []
        for i, z in enumerate(np.linspace(-1.0, 1.0, 2 * count + 1)[1::2]):
            # alternate the rank-one line x = y = 0 with rank-two points of det = 0
            if i % 2 == 0:
                out.append((cusp_family_section(0.0, 0.0, z), tangents))
            else:
                x, y = 0.5 * z, 0.7
                out.append((cusp_family_section(x, y, -x ** 3 / y ** 2), tangents))
        return out
    if name == "surface-j":
        k = int(cfg.options.get("j_k", 3))
        out = []
        for s in np.linspace(-1.0, 1.0, 2 * count + 1)[1::2]:
            if k % 2:
                x, y = s * s, s ** k
            else:
                x, y = s, s ** (k // 2)
            out.append((make_point(surface_j(x, y, k)), surface_j_tangents(x, y, k)))
        return out
    try:
        with open(name) as fh:
            data = json.load(fh)
        tangents = [np.asarray(t, dtype=float) for t in data["tangents"]]
        points = [make_point(np.asarray(p, dtype=float)) for p in data["points"]]
    except (OSError, KeyError, TypeError, ValueError) as exc:
        raise InputError(f"cannot read section file {name!r}: {exc}") from exc
    return [(p, tangents) for p in points]


def run_transversal(cfg):
    """Pointwise transversality of a section along its singular locus.

    A non-transversal point counts as a violation, and the first one (in grid
    order) is reported.
    """
    t0 = time.perf_counter()
    records = []
    for i, (pt, tangents) in enumerate(_section_points(cfg)):
        try:
            rep = transversality_report(pt, tangents, cfg.rank_tol)
        except PreconditionError as exc:
            records.append({"trial": i, "status": "skipped", "error": str(exc)})
            continue
        rec = {"trial": i, "point": pt.entries.tolist()}
        rec.update(rep)
        rec["status"] = "ok" if rep["transversal"] else "violation"
        records.append(rec)
    first = next((r for r in records if r["status"] == "violation"), None)
    extra = {"transversal": first is None,
             "first_failure": None if first is None else {"trial": first["trial"],
                                                          "point": first["point"],
                                                          "rank": first["rank"]}}
    return _finish(cfg, records, None, t0, extra)


# --- single path ---------------------------------------------------------------------

def run_path(cfg):
    """Build one path between two matrices read from JSON files."""
    s = _require_stratum(cfg)
    try:
        a, b = load_point(cfg.options["a"]), load_point(cfg.options["b"])
    except KeyError as exc:
        raise InputError("path needs both endpoints (--a and --b)") from exc
    kind = cfg.options.get("kind", "closure")
    t0 = time.perf_counter()
    if kind == "closure":
        path = closure_path(a, b, s, cfg.rank_tol, cfg.cert_tol)
        bound = CLOSURE_BOUND
    elif kind == "sqrt2":
        path = closure_path_sqrt2(a, b, s, cfg.rank_tol, cfg.cert_tol)
        bound = SQRT2_BOUND
    elif kind == "stratum":
        path = stratum_path(a, b, s, seed=cfg.seed, rank_tol=cfg.rank_tol)
        bound = CLOSURE_BOUND * (1.0 + cfg.stratum_slack)
    else:
        raise InputError(f"unknown path kind {kind!r}")
    if cfg.bound is not None:
        bound = cfg.bound
    d = frobenius_dist(a, b)
    ratio = _ratio(path.total_length, d)
    cert = path.certificate
    rec = {"trial": 0, "kind": kind, "d_out": d, "length": path.total_length, "ratio": ratio,
           "segments": len(path.segments), "rank_a": numerical_rank(a, cfg.rank_tol),
           "rank_b": numerical_rank(b, cfg.rank_tol),
           "certificate": None if cert is None else cert.to_json(),
           "status": "ok" if ratio <= bound * (1.0 + cfg.len_tol) else "violation"}
    if cfg.emit_samples:
        path.export(cfg.emit_samples)
    return _finish(cfg, [rec], bound, t0)


CAMPAIGNS = {
    "verify-closure": run_verify_closure,
    "verify-stratum": run_verify_stratum,
    "oracle": run_oracle_compare,
    "cusp": run_cusp,
    "arrangement": run_arrangement,
    "angle": run_angle,
    "classify": run_classify,
    "transversal": run_transversal,
    "path": run_path,
}


def run_campaign(cfg):
    try:
        runner = CAMPAIGNS[cfg.command]
    except KeyError as exc:
        raise InputError(f"unknown campaign {cfg.command!r}") from exc
    return runner(cfg)
