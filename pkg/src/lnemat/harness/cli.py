"""Command-line entry point: ``lnemat <campaign> [options]``.

Exit codes: 0 pass, 1 bound or invariant violated, 2 bad input,
3 numerical-failure budget exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys

from ..errors import InputError, NumericalError, PreconditionError
from ..strata import StratumSpec
from .campaigns import CAMPAIGNS, run_campaign
from .report import EXIT_INPUT, EXIT_NUMERICAL, CampaignConfig

NEEDS_STRATUM = {"verify-closure", "verify-stratum", "oracle", "classify", "path"}

HELP = {
    "verify-closure": "paths inside {rank <= r} between random pairs",
    "verify-stratum": "paths inside the rank-r stratum between same-component pairs",
    "oracle": "constructed paths against k-NN graph distances",
    "cusp": "inner/outer ratios on the cusp curve",
    "arrangement": "two-leg paths on a union of affine subspaces",
    "angle": "principal angles against sampled cosines",
    "classify": "component classification of sampled points",
    "transversal": "pointwise transversality along a section",
    "path": "one path between two matrices stored as JSON",
}


def _common(p):
    g = p.add_argument_group("stratum")
    g.add_argument("--space", default="general", choices=["general", "sym", "skew"])
    g.add_argument("--field", default="R", choices=["R", "C"])
    g.add_argument("--m", type=int, default=3)
    g.add_argument("--n", type=int, default=None, help="defaults to m")
    g.add_argument("--r", type=int, default=None, help="defaults to min(m, n) - 1")
    c = p.add_argument_group("campaign")
    c.add_argument("--trials", type=int, default=100)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--workers", type=int, default=1)
    c.add_argument("--tol-rank", type=float, default=1e-9)
    c.add_argument("--tol-cert", type=float, default=1e-8)
    c.add_argument("--tol-len", type=float, default=1e-6)
    c.add_argument("--slack", type=float, default=0.05,
                   help="relative slack for stratum and oracle bounds")
    c.add_argument("--bound", type=float, default=None, help="override the bound under test")
    c.add_argument("--out", default=None, help="write the JSON report here")
    c.add_argument("--emit-samples", default=None, help="CSV of path or cloud samples")


def build_parser():
    parser = argparse.ArgumentParser(prog="lnemat", description="Verification campaigns for "
                                     "inner-distance bounds on matrix rank strata.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in CAMPAIGNS:
        p = sub.add_parser(name, help=HELP[name])
        _common(p)
        if name == "verify-stratum":
            p.add_argument("--label", default=None, help="component, e.g. 'DetSign(-1)'")
        if name in ("oracle", "cusp"):
            p.add_argument("--cloud", type=int, default=None, help="cloud size")
            p.add_argument("--k", type=int, default=None, help="neighbours per node")
        if name == "cusp":
            p.add_argument("--t", type=float, nargs="+", default=None, help="t grid")
        if name == "arrangement":
            p.add_argument("--arrangement", default=None, help="JSON list of {base, directions}")
            p.add_argument("--radii", type=float, nargs="+", default=None)
        if name == "angle":
            p.add_argument("--ambient", type=int, default=6)
            p.add_argument("--samples", type=int, default=100_000)
            p.add_argument("--angle-tol", type=float, default=1e-3)
        if name == "transversal":
            p.add_argument("--section", default="cusp-family",
                           help="'cusp-family', 'surface-j' or a JSON file {tangents, points}")
            p.add_argument("--j-k", type=int, default=3)
        if name == "path":
            p.add_argument("--a", required=True, help="JSON matrix file (target)")
            p.add_argument("--b", required=True, help="JSON matrix file (start)")
            p.add_argument("--kind", default="closure", choices=["closure", "sqrt2", "stratum"])
    return parser


def config_from_args(args):
    stratum = None
    if args.command in NEEDS_STRATUM:
        n = args.m if args.n is None else args.n
        r = min(args.m, n) - 1 if args.r is None else args.r
        stratum = StratumSpec(args.space, args.field, args.m, n, r)
    opts = {}
    for key, opt in (("label", "label"), ("cloud", "cloud"), ("k", "k"), ("t", "t_grid"),
                     ("arrangement", "arrangement"), ("radii", "radii"), ("ambient", "ambient"),
                     ("samples", "samples"), ("angle_tol", "angle_tol"), ("section", "section"),
                     ("j_k", "j_k"), ("a", "a"), ("b", "b"), ("kind", "kind")):
        val = getattr(args, key, None)
        if val is not None:
            opts[opt] = val
    if args.command == "arrangement" and "arrangement" not in opts:
        opts["m"] = args.m
    return CampaignConfig(
        command=args.command, stratum=stratum, trials=args.trials, seed=args.seed,
        rank_tol=args.tol_rank, cert_tol=args.tol_cert, len_tol=args.tol_len,
        stratum_slack=args.slack, oracle_slack=args.slack, bound=args.bound, out=args.out,
        emit_samples=args.emit_samples, workers=args.workers, options=opts)


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        report = run_campaign(cfg)
    except (InputError, PreconditionError, ValueError, OSError) as exc:
        print(f"lnemat: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(f"lnemat: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    if cfg.out:
        report.write(cfg.out)
        print(json.dumps(report.to_json()["summary"], sort_keys=True))
    else:
        print(report.dumps())
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
