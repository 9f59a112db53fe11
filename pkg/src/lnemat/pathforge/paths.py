"""Piecewise paths, their certificates, and export."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass

import numpy as np

from ..matcore import RANK_TOL, make_point
from .segments import segment_to_json

CERT_TOL = 1e-8
FLOOR_TOL = 1e-10
JOIN_TOL = 1e-10
SAMPLES = 200


@dataclass
class Certificate:
    """Numerical witness that sampled path points lie on the claimed variety."""

    stratum: dict
    samples_per_segment: int
    max_offstratum_residual: float
    min_floor: float | None = None
    structure_residual: float = 0.0
    label_constant: bool = True
    max_join_gap: float = 0.0
    valid: bool = False
    reason: str = ""

    def to_json(self):
        return asdict(self)


class PiecewisePath:
    """Ordered segments from ``start`` to ``end``.

    An empty path is allowed and represents a constant path at ``point``.
    """

    def __init__(self, segments, stratum=None, certificate=None, point=None, meta=None):
        self.segments = list(segments)
        self.stratum = stratum
        self.certificate = certificate
        self._point = None if point is None else np.asarray(point)
        self.meta = dict(meta or {})
        self._lengths = None

    @property
    def lengths(self):
        if self._lengths is None:
            self._lengths = [seg.length() for seg in self.segments]
        return self._lengths

    @property
    def total_length(self):
        return float(sum(self.lengths))

    @property
    def start(self):
        return self.segments[0].start if self.segments else self._point

    @property
    def end(self):
        return self.segments[-1].end if self.segments else self._point

    def __len__(self):
        return len(self.segments)

    def reversed(self):
        return PiecewisePath([s.reversed() for s in reversed(self.segments)], self.stratum,
                             point=self._point, meta=self.meta)

    def join_gaps(self):
        return [float(np.linalg.norm(a.end - b.start))
                for a, b in zip(self.segments, self.segments[1:])]

    def sample(self, per_segment=SAMPLES):
        """Stacked samples, ``per_segment`` uniform parameters on each segment."""
        if not self.segments:
            return np.asarray(self._point)[None] if self._point is not None else np.zeros((0, 0, 0))
        ts = np.linspace(0.0, 1.0, per_segment)
        return np.concatenate([seg.sample(ts) for seg in self.segments])

    def at(self, ts):
        """Points at global parameters in [0, 1]; segment i covers [i/N, (i+1)/N]."""
        ts = np.clip(np.asarray(ts, dtype=float), 0.0, 1.0)
        if not self.segments:
            return np.repeat(np.asarray(self._point)[None], len(ts), axis=0)
        nseg = len(self.segments)
        idx = np.minimum((ts * nseg).astype(int), nseg - 1)
        local = ts * nseg - idx
        out = [self.segments[i].point(u) for i, u in zip(idx, local)]
        return np.array(out)

    def to_json(self):
        return {
            "segments": [segment_to_json(s) for s in self.segments],
            "lengths": self.lengths,
            "total_length": self.total_length,
            "certificate": None if self.certificate is None else self.certificate.to_json(),
            "meta": {k: v for k, v in self.meta.items() if isinstance(v, (int, float, str, bool))},
        }

    def export(self, csv_path, samples=SAMPLES):
        """Write sampled points (one matrix per row, row-major) plus a JSON sidecar."""
        pts = self.sample(samples)
        with open(csv_path, "w", newline="") as fh:
            w = csv.writer(fh)
            for x in pts:
                flat = x.reshape(-1)
                if np.iscomplexobj(flat):
                    w.writerow([f"{v.real!r}{v.imag:+.17g}j" for v in flat])
                else:
                    w.writerow([repr(float(v)) for v in flat])
        sidecar = str(csv_path) + ".json"
        with open(sidecar, "w") as fh:
            json.dump(self.to_json(), fh, indent=2, sort_keys=True)
        return sidecar


def path_length(p):
    return p.total_length


def sample_path(p, k):
    """``k`` points at a uniform grid of the global parameter, as MatrixPoints."""
    pts = p.at(np.linspace(0.0, 1.0, k))
    structure = p.stratum.space if p.stratum is not None else "general"
    return [make_point(x, structure=structure) for x in pts]


def _structure_residual(xs, space):
    if space == "general" or xs.size == 0:
        return 0.0
    t = np.swapaxes(xs, 1, 2)
    diff = xs - t if space == "sym" else xs + t
    scale = max(np.abs(xs).max(), 1e-300)
    return float(np.abs(diff).max() / scale)


def certify(p, s, samples=SAMPLES, cert_tol=CERT_TOL, floor_tol=FLOOR_TOL,
            rank_tol=RANK_TOL, label=None):
    """Check sampled points of ``p`` against the stratum ``s``; never raises.

    Closure mode bounds ``sigma_{r+1} / sigma_max``; stratum mode also bounds
    ``sigma_r / sigma_max`` from below and, for real strata, checks that the
    component label is constant along the samples (and equal to ``label``
    when given).
    """
    from ..strata import label_code, label_codes

    cert = Certificate(stratum=s.to_json(), samples_per_segment=int(samples),
                       max_offstratum_residual=float("inf"))
    try:
        if samples < 2:
            raise ValueError("need at least two samples per segment")
        xs = p.sample(samples)
        if xs.ndim != 3 or xs.shape[1:] != (s.m, s.n):
            raise ValueError(f"path samples have shape {xs.shape[1:]}, expected {(s.m, s.n)}")
        if not np.all(np.isfinite(xs)):
            raise ValueError("non-finite sample")
        sv = np.linalg.svd(xs, compute_uv=False)
        smax = sv[:, 0]
        safe = np.where(smax > 0, smax, 1.0)
        r = s.r
        if r < sv.shape[1]:
            resid = np.where(smax > 0, sv[:, r] / safe, 0.0)
            cert.max_offstratum_residual = float(resid.max())
        else:
            cert.max_offstratum_residual = 0.0
        ok = cert.max_offstratum_residual <= cert_tol
        reasons = [] if ok else ["off-variety sample"]
        if s.mode == "stratum" and r > 0:
            floor = np.where(smax > 0, sv[:, r - 1] / safe, 0.0)
            cert.min_floor = float(floor.min())
            if cert.min_floor < floor_tol:
                ok = False
                reasons.append("rank drop")
            codes = label_codes(xs, s, rank_tol)
            cert.label_constant = bool(np.all(codes == codes[0]))
            if label is not None and codes.size and codes[0] != label_code(label):
                cert.label_constant = False
            if not cert.label_constant:
                ok = False
                reasons.append("component label changes")
        cert.structure_residual = _structure_residual(xs, s.space)
        if cert.structure_residual > 1e-12:
            ok = False
            reasons.append("structure broken")
        gaps = p.join_gaps()
        cert.max_join_gap = max(gaps) if gaps else 0.0
        scale = max(float(np.abs(xs).max()), 1.0)
        if cert.max_join_gap > JOIN_TOL * scale:
            ok = False
            reasons.append("segments do not join")
        cert.valid = bool(ok)
        cert.reason = "; ".join(reasons)
    except Exception as exc:  # a failed certificate is a value
        cert.valid = False
        cert.reason = f"certification error: {exc}"
    p.certificate = cert
    return cert
