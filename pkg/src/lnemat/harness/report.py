"""Campaign configuration and versioned, deterministic JSON reports."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import InputError
from ..strata import StratumSpec

REPORT_VERSION = "1.0"
FAILURE_BUDGET = 0.01

EXIT_PASS, EXIT_VIOLATION, EXIT_INPUT, EXIT_NUMERICAL = 0, 1, 2, 3


@dataclass
class CampaignConfig:
    """Everything a campaign needs; echoed verbatim into its report."""

    command: str
    stratum: StratumSpec | None = None
    trials: int = 100
    seed: int = 0
    rank_tol: float = 1e-9
    cert_tol: float = 1e-8
    len_tol: float = 1e-6
    stratum_slack: float = 0.05
    oracle_slack: float = 0.05
    bound: float | None = None
    out: str | None = None
    emit_samples: str | None = None
    workers: int = 1
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.trials < 1:
            raise InputError("trials must be at least 1")
        for name in ("rank_tol", "cert_tol", "len_tol", "stratum_slack", "oracle_slack"):
            if not getattr(self, name) > 0:
                raise InputError(f"{name} must be positive")
        if self.bound is not None and not self.bound > 0:
            raise InputError("bound must be positive")
        if not 0 <= self.seed < 2 ** 64:
            raise InputError("seed must be a 64-bit unsigned integer")
        if self.workers < 1:
            raise InputError("workers must be at least 1")

    def to_json(self):
        return {
            "command": self.command,
            "stratum": None if self.stratum is None else self.stratum.to_json(),
            "trials": self.trials,
            "seed": self.seed,
            "tolerances": {"rank_tol": self.rank_tol, "cert_tol": self.cert_tol,
                           "len_tol": self.len_tol, "stratum_slack": self.stratum_slack,
                           "oracle_slack": self.oracle_slack},
            "bound_override": self.bound,
            "options": {k: v for k, v in sorted(self.options.items())},
        }


def trial_rng(seed, trial):
    """Independent stream for one trial, a function of (seed, trial) only."""
    return np.random.default_rng([int(seed), int(trial)])


def clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isfinite(x):
            return x
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    if isinstance(obj, np.ndarray):
        return clean(obj.tolist())
    return obj


@dataclass
class ExperimentReport:
    config: dict
    records: list
    summary: dict
    version: str = REPORT_VERSION

    def to_json(self, include_wall_time=True):
        summary = dict(self.summary)
        if not include_wall_time:
            summary.pop("wall_time", None)
        return clean({"version": self.version, "config": self.config,
                      "records": sorted(self.records, key=lambda r: r["trial"]),
                      "summary": summary})

    def dumps(self, include_wall_time=True):
        return json.dumps(self.to_json(include_wall_time), sort_keys=True, indent=1)

    def canonical_bytes(self):
        """Serialization without the wall-time field, for determinism checks."""
        return self.dumps(include_wall_time=False).encode()

    def write(self, path):
        with open(path, "w") as fh:
            fh.write(self.dumps())
            fh.write("\n")

    @property
    def passed(self):
        return bool(self.summary["pass"])

    @property
    def exit_code(self):
        s = self.summary
        if s.get("numerical_failures", 0) > FAILURE_BUDGET * max(s.get("trials", 1), 1):
            return EXIT_NUMERICAL
        return EXIT_PASS if s["pass"] else EXIT_VIOLATION


def summarize(records, bound, wall_time, extra=None):
    """Summary block: pass iff no record is a violation."""
    ratios = [r["ratio"] for r in records if isinstance(r.get("ratio"), (int, float))
              and math.isfinite(r["ratio"])]
    violations = sum(1 for r in records if r.get("status") == "violation")
    failures = sum(1 for r in records if r.get("status") == "numerical_failure")
    skipped = sum(1 for r in records if r.get("status") == "skipped")
    out = {
        "trials": len(records),
        "max_ratio": max(ratios) if ratios else None,
        "bound": bound,
        "violations": violations,
        "numerical_failures": failures,
        "skipped": skipped,
        "pass": violations == 0,
        "wall_time": wall_time,
    }
    if extra:
        out.update(extra)
    return out
