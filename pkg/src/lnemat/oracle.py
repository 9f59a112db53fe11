"""Independent inner-distance estimates: point clouds, k-NN graphs, closed-form curves."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra
from scipy.spatial import cKDTree

from .errors import InputError, PreconditionError
from .matcore import RANK_TOL, make_point, numerical_rank
from .strata import StratumSpec

MAX_CLOUD = 10_000
SV_RANGE = (0.1, 1.0)


def _orthonormal(rng, n, k, cplx):
    g = rng.standard_normal((n, k))
    if cplx:
        g = g + 1j * rng.standard_normal((n, k))
    q, _ = np.linalg.qr(g)
    return q


def sample_point(s, rng, rank=None, label=None, norm=1.0):
    """One matrix of the given rank (default ``s.r``) with Frobenius norm ``norm``.

    ``label`` (a ComponentLabel) selects the connected component for real
    strata; otherwise the component is random.
    """
    k = s.r if rank is None else rank
    m, n = s.m, s.n
    cplx = s.field == "C"
    if k == 0:
        return np.zeros((m, n), dtype=complex if cplx else float)
    sv = rng.uniform(*SV_RANGE, size=k)
    if s.space == "general":
        u = _orthonormal(rng, m, k, cplx)
        v = _orthonormal(rng, n, k, cplx)
        if label is not None and label.kind == "det" and k == m == n:
            want = label.value[0]
            if np.sign(np.linalg.det(u) * np.linalg.det(v)) != want:
                u[:, 0] *= -1
        x = (u * sv) @ v.conj().T
    elif s.space == "sym":
        q = _orthonormal(rng, n, k, False)
        if label is not None and label.kind == "signature":
            p = label.value[0]
            signs = np.array([1.0] * p + [-1.0] * (k - p))
        else:
            signs = rng.choice([-1.0, 1.0], size=k)
        x = (q * (signs * sv)) @ q.T
    else:
        if k % 2:
            raise InputError("skew-symmetric ranks are even")
        q = _orthonormal(rng, n, k, False)
        t = np.zeros((k, k))
        for i in range(0, k, 2):
            t[i, i + 1], t[i + 1, i] = sv[i], -sv[i]
        if label is not None and label.kind == "pfaffian" and k == n:
            from .strata import pfaffian

            if np.sign(pfaffian(q @ t @ q.T)) != label.value[0]:
                t[0, 1], t[1, 0] = -t[0, 1], -t[1, 0]
        x = q @ t @ q.T
        x = 0.5 * (x - x.T)
    if s.space == "sym":
        x = 0.5 * (x + x.T)
    return x * (norm / np.linalg.norm(x))


@dataclass(frozen=True, eq=False)
class PointCloud:
    stratum: StratumSpec
    array: np.ndarray
    radius: float
    seed: int
    ranks: np.ndarray = field(default=None)

    @property
    def points(self):
        return [make_point(x, self.stratum.field, self.stratum.space) for x in self.array]

    def __len__(self):
        return len(self.array)

    def export(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            for x in self.array:
                w.writerow([repr(complex(v)) if np.iscomplexobj(x) else repr(float(v)) for v in x.reshape(-1)])


def sample_stratum(s, count, radius=1.0, seed=0, label=None, rank_tol=RANK_TOL):
    """Random points of ``X_r`` (mode 'stratum') or of its closure, inside a ball.

    Closure clouds mix ranks ``0..r`` uniformly.  Norms are uniform in
    ``(0, radius]``.  Deterministic per seed.
    """
    if count < 1:
        raise InputError("count must be at least 1")
    if count > MAX_CLOUD:
        raise InputError(f"clouds are capped at {MAX_CLOUD} points")
    rng = np.random.default_rng(seed)
    pts, ranks = [], []
    for _ in range(count):
        k = s.r if s.mode == "stratum" else int(rng.integers(0, s.r + 1))
        if s.space == "skew":
            k -= k % 2
        norm = radius * rng.uniform(1e-3, 1.0)
        pts.append(sample_point(s, rng, k, label, norm))
        ranks.append(k)
    arr = np.array(pts)
    for x, k in zip(arr, ranks):
        got = numerical_rank(x, rank_tol) if np.any(x) else 0
        if got != k:
            raise PreconditionError(f"sampled point has rank {got}, expected {k}")
    return PointCloud(s, arr, float(radius), int(seed) if np.isscalar(seed) else 0, np.array(ranks))


def _as_real_rows(xs):
    xs = np.asarray(xs)
    flat = xs.reshape(len(xs), -1)
    if np.iscomplexobj(flat):
        flat = np.hstack([flat.real, flat.imag])
    return flat


@dataclass(frozen=True, eq=False)
class GeodesicGraph:
    """Symmetric k-NN graph on a cloud; edge weights are chord lengths."""

    cloud_points: np.ndarray
    k: int
    rows: np.ndarray
    cols: np.ndarray
    weights: np.ndarray
    tree: cKDTree

    @property
    def edges(self):
        return list(zip(self.rows.tolist(), self.cols.tolist(), self.weights.tolist()))

    def export(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["i", "j", "weight"])
            for i, j, wt in self.edges:
                w.writerow([i, j, repr(wt)])


def build_graph(cloud, k=12):
    """k-NN graph (union of both directions) over a PointCloud or an array of points."""
    arr = cloud.array if isinstance(cloud, PointCloud) else np.asarray(cloud)
    if len(arr) == 0:
        raise InputError("empty cloud")
    flat = _as_real_rows(arr)
    tree = cKDTree(flat)
    kk = min(k + 1, len(flat))
    _, idx = tree.query(flat, k=kk)
    idx = np.atleast_2d(idx)
    rows = np.repeat(np.arange(len(flat)), kk - 1)
    cols = idx[:, 1:].reshape(-1)
    lo, hi = np.minimum(rows, cols), np.maximum(rows, cols)
    keep = lo != hi
    pairs = np.unique(np.stack([lo[keep], hi[keep]], axis=1), axis=0)
    weights = np.linalg.norm(flat[pairs[:, 0]] - flat[pairs[:, 1]], axis=1)
    return GeodesicGraph(arr, int(k), pairs[:, 0], pairs[:, 1], weights, tree)


def graph_inner_distance(g, a, b):
    """Shortest graph path between ``a`` and ``b`` attached to their k nearest cloud points.

    Every edge is a chord, so the result is at least ``|a - b|``; ``inf``
    signals that the two attachment sets are disconnected.
    """
    xa = np.asarray(a.entries if hasattr(a, "entries") else a)
    xb = np.asarray(b.entries if hasattr(b, "entries") else b)
    if np.array_equal(xa, xb):
        return 0.0
    n = len(g.cloud_points)
    flat = _as_real_rows(np.array([xa, xb]))
    kk = min(g.k, n)
    dist, idx = g.tree.query(flat, k=kk)
    dist, idx = np.atleast_2d(dist).reshape(2, -1), np.atleast_2d(idx).reshape(2, -1)
    # nodes n and n+1 are the query points
    rows = np.concatenate([g.rows, np.full(kk, n), np.full(kk, n + 1)])
    cols = np.concatenate([g.cols, idx[0], idx[1]])
    w = np.concatenate([g.weights, dist[0], dist[1]])
    w = np.maximum(w, 1e-300)
    adj = coo_matrix((w, (rows, cols)), shape=(n + 2, n + 2)).tocsr()
    d = dijkstra(adj, directed=False, indices=n)
    return float(d[n + 1])


# --- closed-form curves -----------------------------------------------------------

def cusp_arc_length(t):
    """Arc length of ``s -> (s^2, s^3)`` over ``[0, t]``: ``((4 + 9t^2)^{3/2} - 8) / 27``."""
    return ((4.0 + 9.0 * t * t) ** 1.5 - 8.0) / 27.0


def cusp_arc_length_quad(t):
    val, _ = quad(lambda s: np.sqrt(4 * s * s + 9 * s ** 4), 0.0, t, epsabs=1e-14, epsrel=1e-12)
    return float(val)


def cusp_ratio(t):
    """Inner/outer ratio for the points ``(t^2, +-t^3)`` of the cusp ``x^3 = y^2``.

    Both points are joined inside the curve through the cusp point, so the
    inner distance is twice the arc length while the outer distance is
    ``2 t^3``.  The ratio behaves like ``1/t`` as ``t -> 0``.
    """
    if not 0.0 < t <= 1.0:
        raise InputError("t must lie in (0, 1]")
    return cusp_arc_length(t) / t ** 3


def cusp_points(t):
    return np.array([[t * t, t ** 3]]), np.array([[t * t, -t ** 3]])


def cusp_cloud(count, s_max=1.0):
    """Points ``(s^2, s^3)`` for ``s`` on a uniform grid of ``[-s_max, s_max]`` (1 x 2 matrices)."""
    s = np.linspace(-s_max, s_max, count)
    return np.stack([s * s, s ** 3], axis=1)[:, None, :]


def cusp_family_section(x, y, z):
    """The linear section ``F(x, y, z) = [[x, 0, z], [y, x, 0], [0, y, x]]``.

    Its determinant expands to ``x^3 + y^2 z``.
    """
    return make_point(np.array([[x, 0.0, z], [y, x, 0.0], [0.0, y, x]], dtype=float))


def cusp_family_tangents():
    """Partial derivatives of ``F`` (constant, since ``F`` is linear)."""
    return [cusp_family_section(1, 0, 0).entries, cusp_family_section(0, 1, 0).entries,
            cusp_family_section(0, 0, 1).entries]


def surface_j(x, y, k=3):
    """The surface ``j(x, y) = [[y, x^(k-1)], [x, y]]``."""
    return np.array([[y, x ** (k - 1)], [x, y]], dtype=float)


def surface_j_tangents(x, y, k=3):
    return [np.array([[0.0, (k - 1) * x ** (k - 2)], [1.0, 0.0]]), np.array([[1.0, 0.0], [0.0, 1.0]])]


__all__ = [
    "PointCloud", "GeodesicGraph", "sample_point", "sample_stratum", "build_graph",
    "graph_inner_distance", "cusp_ratio", "cusp_arc_length", "cusp_arc_length_quad",
    "cusp_points", "cusp_cloud", "cusp_family_section", "cusp_family_tangents", "surface_j",
    "surface_j_tangents",
]
