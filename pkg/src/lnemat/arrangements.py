"""Unions of affine subspaces: intersections, angles, optimal constants, paths."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.linalg import null_space, orth

from .errors import InputError
from .pathforge.paths import PiecewisePath
from .pathforge.segments import Linear

ORTHO_TOL = 1e-10
INTERSECT_TOL = 1e-9
RANK_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class AffineSubspace:
    """``base + span(directions)``; ``directions`` has orthonormal columns."""

    base: np.ndarray
    directions: np.ndarray

    def __post_init__(self):
        base = np.asarray(self.base, dtype=float).reshape(-1)
        d = np.asarray(self.directions, dtype=float)
        if d.ndim != 2 or d.shape[0] != base.size:
            raise InputError(f"directions must be an (N, k) array with N={base.size}")
        if d.shape[1] < 1:
            raise InputError("affine subspaces in an arrangement have positive dimension")
        resid = np.abs(d.T @ d - np.eye(d.shape[1])).max()
        if resid > ORTHO_TOL:
            raise InputError(f"direction frame is not orthonormal (residual {resid:.3g})")
        if not np.all(np.isfinite(base)) or not np.all(np.isfinite(d)):
            raise InputError("non-finite affine subspace data")
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "directions", d)

    @classmethod
    def spanned(cls, base, vectors):
        """Subspace through ``base`` spanned by the columns of ``vectors`` (any basis)."""
        v = np.asarray(vectors, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        return cls(base, orth(v, rcond=RANK_TOL))

    @property
    def ambient_dim(self):
        return self.base.size

    @property
    def dim(self):
        return self.directions.shape[1]

    def project(self, p):
        p = np.asarray(p, dtype=float)
        return self.base + self.directions @ (self.directions.T @ (p - self.base))

    def distance(self, p):
        return float(np.linalg.norm(np.asarray(p, dtype=float) - self.project(p)))

    def contains_point(self, p, tol=INTERSECT_TOL):
        return self.distance(p) <= tol * (1.0 + np.linalg.norm(p))

    def contains(self, other, tol=INTERSECT_TOL):
        """True iff ``other`` is a subset of this subspace."""
        if not self.contains_point(other.base, tol):
            return False
        resid = other.directions - self.directions @ (self.directions.T @ other.directions)
        return float(np.abs(resid).max()) <= tol

    def to_json(self):
        return {"base": self.base.tolist(), "directions": self.directions.T.tolist()}


@dataclass(frozen=True, eq=False)
class Arrangement:
    subspaces: tuple

    def __post_init__(self):
        subs = tuple(self.subspaces)
        if not subs:
            raise InputError("an arrangement needs at least one subspace")
        n = subs[0].ambient_dim
        if any(s.ambient_dim != n for s in subs):
            raise InputError("subspaces live in different ambient spaces")
        for i, li in enumerate(subs):
            for j, lj in enumerate(subs):
                if i != j and lj.contains(li):
                    raise InputError(f"subspace {i} is contained in subspace {j}")
        object.__setattr__(self, "subspaces", subs)

    def __len__(self):
        return len(self.subspaces)

    def locate(self, p, tol=INTERSECT_TOL):
        """Indices of the subspaces containing ``p``."""
        return [i for i, s in enumerate(self.subspaces) if s.contains_point(p, tol)]


@dataclass(frozen=True, eq=False)
class AngleResult:
    """Angle between two intersecting subspaces.

    ``contained`` marks the degenerate case where one quotient direction space
    is trivial (one subspace inside the other); ``alpha`` is then 0.
    """

    alpha: float
    intersection: object
    cos_alpha: float
    contained: bool = False


def intersect(l1, l2):
    """Affine intersection: an AffineSubspace, a point (ndarray), or None when empty."""
    if l1.ambient_dim != l2.ambient_dim:
        raise InputError("subspaces live in different ambient spaces")
    system = np.hstack([l1.directions, -l2.directions])
    rhs = l2.base - l1.base
    sol, *_ = np.linalg.lstsq(system, rhs, rcond=None)
    resid = float(np.linalg.norm(system @ sol - rhs))
    scale = 1.0 + max(np.linalg.norm(l1.base), np.linalg.norm(l2.base))
    if resid > INTERSECT_TOL * scale:
        return None
    point = l1.base + l1.directions @ sol[: l1.dim]
    kernel = null_space(system, rcond=RANK_TOL)
    if kernel.shape[1] == 0:
        return point
    dirs = orth(l1.directions @ kernel[: l1.dim], rcond=RANK_TOL)
    if dirs.shape[1] == 0:
        return point
    return AffineSubspace(point, dirs)


def _intersection_parts(inter):
    if inter is None:
        return None, None
    if isinstance(inter, AffineSubspace):
        return inter.base, inter.directions
    return np.asarray(inter), np.zeros((np.asarray(inter).size, 0))


def quotient_directions(l, w):
    """Orthonormal basis of the directions of ``l`` orthogonal to the columns of ``w``."""
    d = l.directions
    if w.shape[1]:
        d = d - w @ (w.T @ d)
    if not np.any(d):
        return np.zeros((l.ambient_dim, 0))
    return orth(d, rcond=1e-8)


def subspace_angle(l1, l2):
    """Angle between intersecting subspaces after quotienting by the intersection.

    ``cos(alpha)`` is the sup of the cosine between nonzero vectors of the two
    reduced direction spaces, i.e. the largest singular value of ``Q1^T Q2``.
    """
    inter = intersect(l1, l2)
    if inter is None:
        raise InputError("subspaces do not intersect; their angle is undefined")
    _, w = _intersection_parts(inter)
    q1, q2 = quotient_directions(l1, w), quotient_directions(l2, w)
    if q1.shape[1] == 0 or q2.shape[1] == 0:
        return AngleResult(0.0, inter, 1.0, contained=True)
    c = float(min(1.0, np.linalg.svd(q1.T @ q2, compute_uv=False)[0]))
    # arccos loses accuracy near 1; take the angle from the sine instead
    if c > 0.9:
        proj = q2 - q1 @ (q1.T @ q2)
        s_min = np.linalg.svd(proj, compute_uv=False).min() if proj.size else 0.0
        alpha = float(np.arcsin(min(1.0, s_min)))
    else:
        alpha = float(np.arccos(c))
    return AngleResult(alpha, inter, c)


def sampled_cos_sup(l1, l2, samples, rng):
    """Monte Carlo estimate of the sup-of-cosines angle definition.

    Random nonzero vectors ``x, y`` in the two quotient direction spaces (taken
    at an intersection point) are compared through the law of cosines; the
    largest value is returned.
    """
    inter = intersect(l1, l2)
    if inter is None:
        raise InputError("subspaces do not intersect")
    _, w = _intersection_parts(inter)
    q1, q2 = quotient_directions(l1, w), quotient_directions(l2, w)
    if q1.shape[1] == 0 or q2.shape[1] == 0:
        return 1.0
    x = rng.standard_normal((samples, q1.shape[1])) @ q1.T
    y = rng.standard_normal((samples, q2.shape[1])) @ q2.T
    dx = np.linalg.norm(x, axis=1)
    dy = np.linalg.norm(y, axis=1)
    dxy = np.linalg.norm(x - y, axis=1)
    vals = (dx ** 2 + dy ** 2 - dxy ** 2) / (2.0 * dx * dy)
    return float(vals.max())


def pair_constant(alpha):
    return 1.0 / np.sin(alpha / 2.0)


def arrangement_constant(arr):
    """``sup_{i != j} 1 / sin(alpha_ij / 2)``; 1 for a single subspace."""
    best = 1.0
    subs = arr.subspaces
    for i in range(len(subs)):
        for j in range(i + 1, len(subs)):
            if intersect(subs[i], subs[j]) is None:
                raise InputError(f"subspaces {i} and {j} do not intersect")
            res = subspace_angle(subs[i], subs[j])
            if res.contained or res.alpha <= 0.0:
                raise InputError(f"subspaces {i} and {j} meet at angle zero")
            best = max(best, pair_constant(res.alpha))
    return float(best)


def optimal_junction(x, y, inter):
    """Point ``w`` of the intersection minimizing ``|x - w| + |w - y|``.

    Writing ``x = p + W a + h`` with ``h`` orthogonal to the intersection
    directions ``W`` (same for ``y``), the minimizer lies on the segment
    ``[a_x, a_y]`` at the fraction ``|h_x| / (|h_x| + |h_y|)`` (unfold the two
    half-planes into one).
    """
    p, w = _intersection_parts(inter)
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if w.shape[1] == 0:
        return p
    ax, ay = w.T @ (x - p), w.T @ (y - p)
    hx = np.linalg.norm(x - p - w @ ax)
    hy = np.linalg.norm(y - p - w @ ay)
    lam = 0.5 if hx + hy == 0.0 else hx / (hx + hy)
    return p + w @ (ax + lam * (ay - ax))


def arrangement_path(x, y, arr, i=None, j=None):
    """Path ``x -> w -> y`` through an optimal point ``w`` of ``L_i`` and ``L_j``.

    ``i`` and ``j`` default to subspaces found to contain ``x`` and ``y``.
    When one subspace contains both points the path is the straight segment.
    """
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    hx = arr.locate(x) if i is None else [i]
    hy = arr.locate(y) if j is None else [j]
    if not hx or not hy:
        raise InputError("point does not lie on the arrangement")
    for k in (hx + hy):
        if not 0 <= k < len(arr):
            raise InputError(f"no subspace with index {k}")
    if not arr.subspaces[hx[0]].contains_point(x) or not arr.subspaces[hy[0]].contains_point(y):
        raise InputError("point does not lie on the named subspace")
    common = sorted(set(arr.locate(x)) & set(arr.locate(y)))
    if common or np.array_equal(x, y):
        segs = [] if np.array_equal(x, y) else [Linear(x[None], y[None])]
        return PiecewisePath(segs, point=x[None], meta={"via": None})
    inter = intersect(arr.subspaces[hx[0]], arr.subspaces[hy[0]])
    if inter is None:
        raise InputError(f"subspaces {hx[0]} and {hy[0]} do not intersect")
    w = optimal_junction(x, y, inter)
    segs = [Linear(x[None], w[None]), Linear(w[None], y[None])]
    return PiecewisePath(segs, meta={"via": w.tolist(), "pair": [hx[0], hy[0]]})


# --- the upper-triangular example -----------------------------------------------

def triangular_coordinates(m):
    """Index pairs ``(i, j)``, ``i <= j``, in row-major order."""
    return [(i, j) for i in range(m) for j in range(i, m)]


def triangular_matrix(vec, m):
    out = np.zeros((m, m))
    for v, (i, j) in zip(np.asarray(vec), triangular_coordinates(m)):
        out[i, j] = v
    return out


def triangular_det0(m):
    """Singular upper-triangular m x m matrices as the union of ``{a_ii = 0}``."""
    if m < 2:
        raise InputError("need m >= 2")
    coords = triangular_coordinates(m)
    n = len(coords)
    subs = []
    for k in range(m):
        drop = coords.index((k, k))
        dirs = np.eye(n)[:, [c for c in range(n) if c != drop]]
        subs.append(AffineSubspace(np.zeros(n), dirs))
    return Arrangement(tuple(subs))


def extremal_pair(arr):
    """Pair ``(i, j)`` attaining the arrangement constant."""
    best, pair = -1.0, None
    subs = arr.subspaces
    for i in range(len(subs)):
        for j in range(i + 1, len(subs)):
            k = pair_constant(subspace_angle(subs[i], subs[j]).alpha)
            if k > best:
                best, pair = k, (i, j)
    return pair


def sharpness_points(arr, radius, rng, pair=None):
    """Far-out points along the principal directions of the extremal pair.

    A fixed random in-subspace offset keeps the pair off the exact extremal
    configuration, so the ratio approaches the constant from below as the
    radius grows.
    """
    i, j = extremal_pair(arr) if pair is None else pair
    li, lj = arr.subspaces[i], arr.subspaces[j]
    inter = intersect(li, lj)
    p, w = _intersection_parts(inter)
    q1, q2 = quotient_directions(li, w), quotient_directions(lj, w)
    u, _, vh = np.linalg.svd(q1.T @ q2)
    dx, dy = q1 @ u[:, 0], q2 @ vh[0]
    ox = li.directions @ rng.standard_normal(li.dim)
    oy = lj.directions @ rng.standard_normal(lj.dim)
    return p + radius * dx + ox, p + radius * dy + oy, (i, j)


def load_arrangement(path):
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, list):
        raise InputError("arrangement file must hold a JSON list")
    subs = []
    for k, item in enumerate(data):
        try:
            subs.append(AffineSubspace.spanned(item["base"], np.asarray(item["directions"], dtype=float).T))
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"bad subspace entry {k}: {exc}") from exc
    return Arrangement(tuple(subs))


def dump_arrangement(arr, path):
    with open(path, "w") as fh:
        json.dump([s.to_json() for s in arr.subspaces], fh, indent=2)
