"""Rank strata: descriptors, connected components, tangent spaces, transversality."""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np
from scipy.linalg import schur

from .errors import InputError, PreconditionError
from .matcore import (
    RANK_TOL,
    MatrixPoint,
    as_array,
    make_point,
    normalize_field,
    normalize_structure,
    numerical_rank,
)


@dataclass(frozen=True)
class StratumSpec:
    """Which variety: ``X_r`` (mode='stratum') or its closure (mode='closure')."""

    space: str
    field: str
    m: int
    n: int
    r: int
    mode: str = "closure"

    def __post_init__(self):
        object.__setattr__(self, "space", normalize_structure(self.space))
        object.__setattr__(self, "field", normalize_field(self.field))
        if self.mode not in ("stratum", "closure"):
            raise InputError(f"mode must be 'stratum' or 'closure', got {self.mode!r}")
        if self.m < 1 or self.n < 1:
            raise InputError("shape must be positive")
        if not 0 <= self.r <= min(self.m, self.n):
            raise InputError(f"r={self.r} outside [0, {min(self.m, self.n)}]")
        if self.space != "general":
            if self.m != self.n:
                raise InputError(f"{self.space} strata need m == n")
            if self.field == "C":
                raise InputError("structured strata are supported over the reals only")
        if self.space == "skew" and self.r % 2:
            raise InputError("skew-symmetric ranks are even")

    def with_mode(self, mode):
        return StratumSpec(self.space, self.field, self.m, self.n, self.r, mode)

    def to_json(self):
        return {"space": self.space, "field": self.field, "m": self.m, "n": self.n,
                "r": self.r, "mode": self.mode}


@dataclass(frozen=True)
class ComponentLabel:
    """Tagged component label.

    kind is one of 'connected', 'det', 'signature', 'pfaffian'; ``value`` is
    ``()`` for connected, ``(+1|-1,)`` for the sign kinds and
    ``(r_plus, r_minus)`` for signatures.
    """

    kind: str
    value: tuple = ()

    def __str__(self):
        if self.kind == "connected":
            return "Connected"
        if self.kind == "det":
            return f"DetSign({self.value[0]:+d})"
        if self.kind == "pfaffian":
            return f"PfaffianSign({self.value[0]:+d})"
        return f"Signature({self.value[0]},{self.value[1]})"


CONNECTED = ComponentLabel("connected")


def DetSign(s):
    return ComponentLabel("det", (int(s),))


def PfaffianSign(s):
    return ComponentLabel("pfaffian", (int(s),))


def Signature(p, q):
    return ComponentLabel("signature", (int(p), int(q)))


def parse_label(text):
    """Inverse of ``str(label)``; also accepts 'det+', 'pf-', 'sig2,1'."""
    t = text.strip().replace(" ", "")
    low = t.lower()
    if low in ("connected", ""):
        return CONNECTED
    for prefix, kind in (("detsign(", "det"), ("pfaffiansign(", "pfaffian")):
        if low.startswith(prefix) and low.endswith(")"):
            return ComponentLabel(kind, (int(t[len(prefix):-1]),))
    if low.startswith("signature(") and low.endswith(")"):
        p, q = t[len("signature("):-1].split(",")
        return Signature(int(p), int(q))
    if low in ("det+", "det-"):
        return DetSign(1 if low[-1] == "+" else -1)
    if low in ("pf+", "pf-"):
        return PfaffianSign(1 if low[-1] == "+" else -1)
    if low.startswith("sig"):
        p, q = low[3:].split(",")
        return Signature(int(p), int(q))
    raise InputError(f"cannot parse component label {text!r}")


# --- Pfaffian -----------------------------------------------------------------

def pfaffian_batch(a):
    """Pfaffians of a stack of real skew matrices, shape (B, n, n).

    Householder congruences reduce each matrix to skew tridiagonal form; each
    non-trivial reflection has determinant -1, which is tracked exactly.
    """
    a = np.array(a, dtype=float, copy=True)
    if a.ndim == 2:
        a = a[None]
    nb, n, n2 = a.shape
    if n != n2 or n % 2:
        raise InputError("Pfaffian needs square matrices of even size")
    sign = np.ones(nb)
    for k in range(n - 2):
        x = a[:, k + 1:, k].copy()
        alpha = np.linalg.norm(x, axis=1)
        s = np.where(x[:, 0] >= 0.0, 1.0, -1.0)
        v = x
        v[:, 0] += s * alpha
        vn = np.einsum("bi,bi->b", v, v)
        active = vn > 0.0
        coef = np.where(active, 2.0 / np.where(active, vn, 1.0), 0.0)
        # rows: H A, then columns: (H A) H
        blk = a[:, k + 1:, :]
        blk -= coef[:, None, None] * v[:, :, None] * np.einsum("bi,bij->bj", v, blk)[:, None, :]
        blk = a[:, :, k + 1:]
        blk -= coef[:, None, None] * np.einsum("bij,bj->bi", blk, v)[:, :, None] * v[:, None, :]
        sign = np.where(active, -sign, sign)
    prod = np.ones(nb)
    for i in range(0, n, 2):
        prod = prod * a[:, i, i + 1]
    return sign * prod


def pfaffian(a):
    """Pfaffian of a real skew-symmetric matrix of even size."""
    x = as_array(a)
    if isinstance(a, MatrixPoint) and (a.structure != "skew" or a.field != "R"):
        raise InputError("pfaffian needs a real skew-symmetric matrix")
    if x.ndim != 2 or x.shape[0] != x.shape[1] or x.shape[0] % 2:
        raise InputError("pfaffian needs a square matrix of even size")
    if np.iscomplexobj(x):
        raise InputError("pfaffian is implemented for real matrices")
    scale = max(np.abs(x).max(initial=0.0), 1.0)
    if np.abs(x + x.T).max(initial=0.0) > 1e-12 * scale:
        raise InputError("matrix is not skew-symmetric")
    return float(pfaffian_batch(x)[0])


# --- components ---------------------------------------------------------------

def _signature_counts(w, scale, rank_tol):
    thr = rank_tol * scale
    return int(np.count_nonzero(w > thr)), int(np.count_nonzero(w < -thr))


def label_kind(spec):
    """Which label family applies to the real/complex stratum ``spec``."""
    if spec.field == "C":
        return "connected"
    if spec.space == "general":
        return "det" if spec.r == spec.m == spec.n else "connected"
    if spec.space == "sym":
        return "signature"
    return "pfaffian" if spec.r == spec.n else "connected"


def component_labels(spec):
    """Every component label of the stratum ``spec``, in a fixed order."""
    kind = label_kind(spec)
    if kind == "connected":
        return [CONNECTED]
    if kind == "det":
        return [DetSign(1), DetSign(-1)]
    if kind == "pfaffian":
        return [PfaffianSign(1), PfaffianSign(-1)]
    return [Signature(p, spec.r - p) for p in range(spec.r, -1, -1)]


def classify_array(x, spec, rank_tol=RANK_TOL, check_rank=True):
    """Component label of the array ``x`` in the stratum ``spec``."""
    x = np.asarray(x)
    if check_rank:
        rank = numerical_rank(x, rank_tol)
        if rank != spec.r:
            raise PreconditionError(f"numerical rank {rank} differs from stratum rank {spec.r}")
    kind = label_kind(spec)
    if kind == "connected":
        return CONNECTED
    if kind == "det":
        return DetSign(1 if np.linalg.det(x) > 0 else -1)
    if kind == "pfaffian":
        return PfaffianSign(1 if pfaffian_batch(x)[0] > 0 else -1)
    w = np.linalg.eigvalsh(x)
    scale = np.abs(w).max(initial=0.0)
    p, q = _signature_counts(w, scale, rank_tol)
    if p + q != spec.r:
        raise PreconditionError("eigenvalue inside the rank tolerance band; signature undefined")
    return Signature(p, q)


def classify_component(a, s, rank_tol=RANK_TOL):
    """Connected-component label of ``a`` inside the rank-``s.r`` stratum."""
    if isinstance(a, MatrixPoint):
        if a.shape != (s.m, s.n) or a.field != s.field or a.structure != s.space:
            raise InputError(f"{a!r} does not live in the space of {s}")
    return classify_array(as_array(a), s, rank_tol)


def same_component(a, b, s, rank_tol=RANK_TOL):
    return classify_component(a, s, rank_tol) == classify_component(b, s, rank_tol)


def label_codes(xs, spec, rank_tol=RANK_TOL):
    """Vectorized integer code of the component label for a stack of matrices.

    The code is the sign for det/Pfaffian labels, ``r_plus`` for signatures,
    and 0 for connected strata.  Used by the certifier on path samples.
    """
    xs = np.asarray(xs)
    kind = label_kind(spec)
    if kind == "connected":
        return np.zeros(len(xs), dtype=int)
    if kind == "det":
        return np.where(np.linalg.det(xs) > 0, 1, -1)
    if kind == "pfaffian":
        return np.where(pfaffian_batch(xs) > 0, 1, -1)
    w = np.linalg.eigvalsh(xs)
    scale = np.abs(w).max(axis=1, keepdims=True)
    return np.count_nonzero(w > rank_tol * scale, axis=1)


def label_code(label):
    if label.kind in ("det", "pfaffian"):
        return label.value[0]
    if label.kind == "signature":
        return label.value[0]
    return 0


# --- tangent spaces -----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TangentSpace:
    """Orthonormal basis (rows, flattened m*n matrices) of ``T_a X_s``."""

    base: MatrixPoint
    basis: np.ndarray
    rank: int

    @property
    def dim(self):
        return self.basis.shape[0]

    def matrices(self):
        return self.basis.reshape(-1, *self.base.shape)

    def project(self, v):
        """Orthogonal projection of the flattened matrix ``v`` onto the tangent space."""
        v = np.asarray(v).reshape(-1)
        return self.basis.T @ (self.basis.conj() @ v)


def tangent_dimension(space, m, n, s):
    """Dimension of the rank-s stratum (over its field) in the given space."""
    if space == "general":
        return m * n - (m - s) * (n - s)
    if space == "sym":
        return n * s - comb(s, 2)
    return n * s - comb(s + 1, 2)


def kernel_frames(x, s):
    """Full unitary factors ``(U, V)`` from the SVD; columns s: span the kernels."""
    u, _, vh = np.linalg.svd(np.asarray(x))
    return u, vh.conj().T


def _structured_pairs(n, s, skew):
    for i in range(n):
        for j in range(i + (1 if skew else 0), n):
            if i >= s and j >= s:
                continue
            yield i, j


def tangent_space(a, s_rank, rank_tol=RANK_TOL):
    """Tangent space ``Span(V_l a, a V_r)`` of the rank stratum at ``a``."""
    if not isinstance(a, MatrixPoint):
        a = make_point(a)
    rank = numerical_rank(a, rank_tol) if np.any(a.entries) else 0
    if rank != s_rank:
        raise PreconditionError(f"numerical rank {rank} differs from {s_rank}")
    m, n = a.shape
    u, v = kernel_frames(a.entries, s_rank)
    vecs = []
    if a.structure == "general":
        for i in range(m):
            for j in range(n):
                if i >= s_rank and j >= s_rank:
                    continue
                vecs.append(np.outer(u[:, i], v[:, j].conj()).reshape(-1))
    else:
        skew = a.structure == "skew"
        q = v
        for i, j in _structured_pairs(n, s_rank, skew):
            if i == j:
                mat = np.outer(q[:, i], q[:, i])
            else:
                mat = np.outer(q[:, i], q[:, j])
                mat = (mat - mat.T) if skew else (mat + mat.T)
                mat = mat / np.sqrt(2.0)
            vecs.append(mat.reshape(-1))
    dtype = complex if a.field == "C" else float
    basis = np.array(vecs, dtype=dtype).reshape(len(vecs), m * n)
    return TangentSpace(a, basis, s_rank)


def _normal_coordinates(x, structure, u_perp, v_perp):
    blk = u_perp.conj().T @ x @ v_perp
    if structure == "general":
        return blk.reshape(-1)
    k = blk.shape[0]
    skew = structure == "skew"
    iu = np.triu_indices(k, 1 if skew else 0)
    w = np.where(iu[0] == iu[1], 1.0, np.sqrt(2.0))
    return blk[iu] * w


def transversality_report(a, v_basis, rank_tol=RANK_TOL):
    """Details of the pointwise transversality test at ``a``.

    The section with tangent ``span(v_basis)`` is transverse to the stratum of
    ``a`` iff the compressions ``U_perp^H v V_perp`` span the whole normal
    space (of dimension ``(m-s)(n-s)`` for general matrices).
    """
    if not isinstance(a, MatrixPoint):
        a = make_point(a)
    x = a.entries
    if not np.any(x):
        raise PreconditionError("transversality is only tested away from the zero matrix")
    s = numerical_rank(a, rank_tol)
    m, n = a.shape
    u, v = kernel_frames(x, s)
    u_perp, v_perp = u[:, s:], v[:, s:]
    if a.structure != "general":
        u_perp = v_perp
    normal_dim = tangent_space_codim(a.structure, m, n, s)
    vs = [np.asarray(as_array(w)).reshape(m, n) for w in v_basis]
    if normal_dim == 0:
        return {"rank": s, "normal_dim": 0, "section_dim": len(vs), "projected_rank": 0,
                "transversal": True}
    if not vs:
        return {"rank": s, "normal_dim": normal_dim, "section_dim": 0, "projected_rank": 0,
                "transversal": False}
    rows = np.array([_normal_coordinates(w, a.structure, u_perp, v_perp) for w in vs])
    scale = max(np.linalg.norm(w) for w in vs)
    sv = np.linalg.svd(rows, compute_uv=False)
    prank = int(np.count_nonzero(sv > rank_tol * max(scale, 1e-300)))
    return {"rank": s, "normal_dim": normal_dim, "section_dim": len(vs), "projected_rank": prank,
            "transversal": prank >= normal_dim}


def tangent_space_codim(structure, m, n, s):
    if structure == "general":
        return (m - s) * (n - s)
    k = n - s
    return k * (k + 1) // 2 if structure == "sym" else k * (k - 1) // 2


def transversal_at(a, v_basis, rank_tol=RANK_TOL):
    """True iff ``span(v_basis) + T_a X_rank(a)`` is the whole ambient space."""
    return transversality_report(a, v_basis, rank_tol)["transversal"]


# --- controlled path-connectedness ---------------------------------------------

def rotation_log(q):
    """Skew-Hermitian ``W`` with ``expm(W) = q`` for ``q`` in SO(n) or U(n).

    Works from the Schur form, so rotations by pi (eigenvalue pairs at -1),
    where the principal matrix logarithm leaves the reals, are handled.
    """
    q = np.asarray(q)
    n = q.shape[0]
    if np.iscomplexobj(q):
        t, z = schur(q, output="complex")
        w = z @ np.diag(1j * np.angle(np.diag(t))) @ z.conj().T
        return 0.5 * (w - w.conj().T)
    t, z = schur(q, output="real")
    lg = np.zeros((n, n))
    minus = []
    i = 0
    while i < n:
        if i + 1 < n and abs(t[i + 1, i]) > 1e-13:
            theta = np.arctan2(0.5 * (t[i + 1, i] - t[i, i + 1]), 0.5 * (t[i, i] + t[i + 1, i + 1]))
            lg[i, i + 1], lg[i + 1, i] = -theta, theta
            i += 2
            continue
        if t[i, i] < 0:
            minus.append(i)
        i += 1
    if len(minus) % 2:
        raise PreconditionError("rotation_log needs a special orthogonal matrix")
    for a_, b_ in zip(minus[::2], minus[1::2]):
        lg[a_, b_], lg[b_, a_] = -np.pi, np.pi
    w = z @ lg @ z.T
    return 0.5 * (w - w.T)


def _to_special(q, flip_col):
    """Flip one column of a real orthogonal matrix if its determinant is -1."""
    if np.isrealobj(q) and np.linalg.det(q) < 0:
        q = q.copy()
        q[:, flip_col] *= -1.0
        return q, True
    return q, False


def special_point(s, delta, label=None):
    """The pivot ``delta * (I (+) 0)`` matched to a component label."""
    x = np.zeros((s.m, s.n), dtype=complex if s.field == "C" else float)
    r = s.r
    if s.space == "general":
        x[np.arange(r), np.arange(r)] = delta
        if label is not None and label.kind == "det" and label.value[0] < 0:
            x[r - 1, r - 1] = -delta
    elif s.space == "sym":
        p = label.value[0] if label is not None else r
        d = np.array([delta] * p + [-delta] * (r - p))
        x[np.arange(r), np.arange(r)] = d
    else:
        for i in range(0, r, 2):
            x[i, i + 1], x[i + 1, i] = delta, -delta
        if label is not None and label.kind == "pfaffian" and label.value[0] < 0:
            x[r - 2, r - 1], x[r - 1, r - 2] = -delta, delta
    return x


def _canonical_general(x, r):
    u, sv, vh = np.linalg.svd(x)
    v = vh.conj().T
    core = np.zeros_like(x)
    core[np.arange(r), np.arange(r)] = sv[:r]
    if np.isrealobj(x):
        m, n = x.shape
        du, dv = np.linalg.det(u) < 0, np.linalg.det(v) < 0
        # columns beyond r are free; otherwise flip the last pivot on both sides
        if du and m > r:
            u[:, -1] *= -1
            du = False
        if dv and n > r:
            v[:, -1] *= -1
            dv = False
        if du and dv:
            u[:, r - 1] *= -1
            v[:, r - 1] *= -1
        elif du or dv:
            # only possible for r == m == n with det(x) < 0: move the sign into the core
            if du:
                u[:, r - 1] *= -1
            else:
                v[:, r - 1] *= -1
            core[r - 1, r - 1] *= -1
    return u, core, v


def _canonical_sym(x, r):
    w, q = np.linalg.eigh(x)
    top = np.argsort(-np.abs(w), kind="stable")[:r]
    pos = sorted((i for i in top if w[i] > 0), key=lambda i: -w[i])
    neg = sorted((i for i in top if w[i] <= 0), key=lambda i: w[i])
    rest = [i for i in range(len(w)) if i not in pos and i not in neg]
    order = pos + neg + rest
    q = q[:, order]
    d = np.zeros(len(w))
    d[:r] = w[order][:r]
    q, _ = _to_special(q, q.shape[1] - 1)
    return q, np.diag(d)


def _canonical_skew(x, r):
    n = x.shape[0]
    t, q = schur(x, output="real")
    # order 2x2 blocks by magnitude, zero part last
    blocks = []
    i = 0
    while i < n:
        if i + 1 < n and abs(t[i + 1, i]) > 0.0:
            blocks.append((abs(t[i, i + 1]), [i, i + 1]))
            i += 2
        else:
            blocks.append((0.0, [i]))
            i += 1
    pairs = sorted([b for b in blocks if len(b[1]) == 2], key=lambda b: -b[0])[: r // 2]
    used = {j for _, idx in pairs for j in idx}
    singles = [j for j in range(n) if j not in used]
    order = [j for _, idx in pairs for j in idx] + singles
    q = q[:, order]
    core = q.T @ x @ q
    lam = np.array([core[2 * k, 2 * k + 1] for k in range(r // 2)])
    if np.linalg.det(q) < 0:
        if r < n:
            q[:, -1] *= -1
        else:
            q[:, 0] *= -1
            lam[0] = -lam[0]
    # pair up negative entries; a leftover negative goes last (or into a zero column)
    neg = [k for k in range(len(lam)) if lam[k] < 0]
    while len(neg) >= 2:
        a_, b_ = neg.pop(0), neg.pop(0)
        q[:, 2 * a_ + 1] *= -1
        q[:, 2 * b_ + 1] *= -1
        lam[a_], lam[b_] = -lam[a_], -lam[b_]
    if neg:
        k = neg[0]
        if r < n:
            q[:, 2 * k + 1] *= -1
            q[:, -1] *= -1
            lam[k] = -lam[k]
        elif k != len(lam) - 1:
            last = len(lam) - 1
            q[:, 2 * k + 1] *= -1
            q[:, 2 * last + 1] *= -1
            lam[k], lam[last] = -lam[k], -lam[last]
    core = np.zeros((n, n))
    for k, val in enumerate(lam):
        core[2 * k, 2 * k + 1], core[2 * k + 1, 2 * k] = val, -val
    return q, core


def gauss_path_to_pivot(p, s, delta, rank_tol=RANK_TOL):
    """Path inside ``X_r`` from ``p`` to the component-matched special point.

    The path first rotates ``p`` (by the identity component of the unitary or
    orthogonal group) to its canonical diagonal/block form, then rescales the
    canonical entries linearly to ``delta``.  The measured constant
    ``length / delta`` is stored under ``path.meta['constant']``.
    """
    from .pathforge.paths import PiecewisePath
    from .pathforge.segments import Linear, Rotation

    if not isinstance(p, MatrixPoint):
        p = make_point(p, s.field, s.space)
    x = p.entries
    if delta <= 0:
        raise InputError("delta must be positive")
    if np.linalg.norm(x) > delta * (1 + 1e-12):
        raise PreconditionError(f"|p| = {np.linalg.norm(x):.6g} exceeds delta = {delta:.6g}")
    label = classify_component(p, s.with_mode("stratum"), rank_tol)
    target = special_point(s, delta, label)
    r = s.r
    segs = []
    if np.allclose(x, target, rtol=0.0, atol=1e-14 * delta):
        path = PiecewisePath([], stratum=s.with_mode("stratum"))
        path.meta["constant"] = 0.0
        return path
    if s.space == "general":
        u, core, v = _canonical_general(x, r)
        wl = rotation_log(u.conj().T)
        wr = rotation_log(v.conj().T)
        rot = Rotation(core, u, wl, v, wr)
    else:
        q, core = (_canonical_sym if s.space == "sym" else _canonical_skew)(x, r)
        w = rotation_log(q.T)
        rot = Rotation(core, q, w, q, w)
    if rot.length() > 1e-15 * delta:
        segs.append(rot)
    segs.append(Linear(core, target))
    path = PiecewisePath(segs, stratum=s.with_mode("stratum"))
    path.meta["constant"] = path.total_length / delta
    return path


__all__ = [
    "StratumSpec", "ComponentLabel", "CONNECTED", "DetSign", "PfaffianSign", "Signature",
    "TangentSpace", "pfaffian", "pfaffian_batch", "classify_component", "same_component",
    "tangent_space", "tangent_dimension", "transversal_at", "transversality_report",
    "gauss_path_to_pivot", "special_point", "parse_label", "label_codes", "component_labels",
]
