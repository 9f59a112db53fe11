"""Paths inside the closure of a rank stratum (rank <= r)."""

from __future__ import annotations

import numpy as np

from ..errors import InputError, NumericalError, PreconditionError
from ..matcore import RANK_TOL, MatrixPoint, frame_arrays, make_point, numerical_rank
from .paths import CERT_TOL, SAMPLES, PiecewisePath, certify
from .segments import BlockScaling, Framed, Linear


def _prepare(a, b, s, rank_tol):
    pts = []
    for name, x in (("a", a), ("b", b)):
        if not isinstance(x, MatrixPoint):
            x = make_point(x, s.field, s.space)
        if x.shape != (s.m, s.n) or x.structure != s.space:
            raise InputError(f"{name} does not live in the space of the stratum")
        if x.field == "C" and s.field == "R":
            raise InputError(f"{name} is complex but the stratum is real")
        rank = numerical_rank(x, rank_tol)
        if rank > s.r:
            raise PreconditionError(f"{name} has numerical rank {rank} > {s.r}")
        pts.append(x.entries)
    return pts


def _finish(path, s, samples, cert_tol, rank_tol, do_certify):
    if do_certify:
        cert = certify(path, s.with_mode("closure"), samples, cert_tol=cert_tol, rank_tol=rank_tol)
        if not cert.valid:
            raise NumericalError(f"closure path failed certification: {cert.reason}",
                                 residual=cert.max_offstratum_residual)
    return path


def closure_path(a, b, s, rank_tol=RANK_TOL, cert_tol=CERT_TOL, samples=SAMPLES, certify_path=True):
    """Path from ``b`` to ``a`` inside ``{rank <= r}`` of length at most ``2 sqrt(2) |a - b|``.

    In the frame where ``a = A1 (+) 0`` the path first shrinks the off-diagonal
    and trailing blocks of ``b`` (``tau -> [[B1, tau B2], [tau B3, tau^2 B4]]``)
    and then moves linearly inside the leading block.
    """
    x, y = _prepare(a, b, s, rank_tol)
    if np.array_equal(x, y):
        path = PiecewisePath([], stratum=s.with_mode("closure"), point=x)
        return _finish(path, s, samples, cert_tol, rank_tol, certify_path)
    r = s.r
    left, right = frame_arrays(x, r, s.space, other=y)
    fy = left.conj().T @ y @ right
    fx = left.conj().T @ x @ right
    mid = np.zeros_like(fy)
    mid[:r, :r] = fy[:r, :r]
    segs = []
    if np.any(fy - mid):
        segs.append(Framed(BlockScaling(fy, r, 1.0, 0.0), left, right))
    segs.append(Framed(Linear(mid, fx), left, right))
    path = PiecewisePath(segs, stratum=s.with_mode("closure"))
    return _finish(path, s, samples, cert_tol, rank_tol, certify_path)


def closure_path_sqrt2(a, b, s, rank_tol=RANK_TOL, cert_tol=CERT_TOL, samples=SAMPLES, certify_path=True):
    """Two straight segments from ``b`` to ``a`` inside ``{rank <= r}``; length <= sqrt(2) |a - b|.

    Only for general matrices: the trailing columns of framed ``b`` are first
    scaled to zero, then the remaining ``r`` columns move straight to ``A1 (+) 0``.
    """
    if s.space != "general":
        raise InputError("the two-segment closure path needs general (unstructured) matrices")
    x, y = _prepare(a, b, s, rank_tol)
    if np.array_equal(x, y):
        path = PiecewisePath([], stratum=s.with_mode("closure"), point=x)
        return _finish(path, s, samples, cert_tol, rank_tol, certify_path)
    r = s.r
    left, right = frame_arrays(x, r, s.space, other=y)
    fy = left.conj().T @ y @ right
    fx = left.conj().T @ x @ right
    mid = fy.copy()
    mid[:, r:] = 0.0
    segs = []
    if np.any(fy[:, r:]):
        segs.append(Framed(Linear(fy, mid), left, right))
    segs.append(Framed(Linear(mid, fx), left, right))
    path = PiecewisePath(segs, stratum=s.with_mode("closure"))
    return _finish(path, s, samples, cert_tol, rank_tol, certify_path)


__all__ = ["closure_path", "closure_path_sqrt2"]
