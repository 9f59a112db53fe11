"""Matrix points, the Frobenius (outer) metric, numerical rank and block frames.

Every matrix space handled by the package is ``Mat_{m x n}`` over the reals or
the complex numbers, optionally restricted to symmetric or skew-symmetric
square matrices.  Distances are always Frobenius distances, so the unitary
(orthogonal) change of frame ``X -> L^H X R`` is an isometry.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import InputError, NumericalError, PreconditionError

RANK_TOL = 1e-9
FRAME_TOL = 1e-10

FIELDS = ("R", "C")
STRUCTURES = ("general", "sym", "skew")

_STRUCTURE_ALIASES = {
    "general": "general",
    "sym": "sym",
    "symmetric": "sym",
    "skew": "skew",
    "skew-symmetric": "skew",
    "skew_symmetric": "skew",
}
_FIELD_ALIASES = {"R": "R", "real": "R", "C": "C", "complex": "C"}


def normalize_structure(structure):
    try:
        return _STRUCTURE_ALIASES[structure]
    except KeyError:
        raise InputError(f"unknown structure {structure!r}") from None


def normalize_field(field):
    try:
        return _FIELD_ALIASES[field]
    except KeyError:
        raise InputError(f"unknown field {field!r}") from None


@dataclass(frozen=True, eq=False)
class MatrixPoint:
    """A point of a matrix space, tagged with its field and structure.

    The entries are copied on construction and frozen (read-only), so a
    ``MatrixPoint`` can be shared freely.
    """

    entries: np.ndarray
    field: str = "R"
    structure: str = "general"

    def __post_init__(self):
        fld = normalize_field(self.field)
        st = normalize_structure(self.structure)
        arr = np.array(self.entries, dtype=complex if fld == "C" else float)
        if arr.ndim != 2:
            raise InputError(f"entries must be a 2-d array, got ndim={arr.ndim}")
        if fld == "R" and np.iscomplexobj(self.entries) and np.any(np.imag(self.entries)):
            raise InputError("complex entries given for a real matrix point")
        if not np.all(np.isfinite(arr)):
            raise InputError("matrix entries must be finite")
        if st != "general":
            if arr.shape[0] != arr.shape[1]:
                raise InputError(f"{st} matrices must be square, got {arr.shape}")
            if fld == "C":
                raise InputError("structured spaces are supported over the reals only")
            if st == "sym" and not np.array_equal(arr, arr.T):
                raise InputError("entries are not exactly symmetric")
            if st == "skew" and not np.array_equal(arr, -arr.T):
                raise InputError("entries are not exactly skew-symmetric")
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)
        object.__setattr__(self, "field", fld)
        object.__setattr__(self, "structure", st)

    @property
    def m(self):
        return self.entries.shape[0]

    @property
    def n(self):
        return self.entries.shape[1]

    @property
    def shape(self):
        return self.entries.shape

    def with_entries(self, entries):
        """Same field and structure, new entries (re-symmetrized if structured)."""
        return make_point(entries, self.field, self.structure)

    def __repr__(self):
        return f"MatrixPoint(field={self.field!r}, structure={self.structure!r}, shape={self.shape})"


def make_point(entries, field=None, structure="general"):
    """Build a MatrixPoint, projecting structured inputs onto their space.

    Unlike the raw constructor this tolerates round-off asymmetry: symmetric
    inputs are replaced by ``(X + X^T)/2`` and skew ones by ``(X - X^T)/2``.
    """
    arr = np.asarray(entries)
    if field is None:
        field = "C" if np.iscomplexobj(arr) and np.any(np.imag(arr)) else "R"
    field = normalize_field(field)
    structure = normalize_structure(structure)
    if field == "R" and np.iscomplexobj(arr):
        if np.any(np.abs(arr.imag) > 1e-12 * (1.0 + np.abs(arr).max(initial=0.0))):
            raise InputError("complex entries given for a real matrix point")
        arr = arr.real
    if structure == "sym":
        arr = 0.5 * (arr + arr.T)
    elif structure == "skew":
        arr = 0.5 * (arr - arr.T)
    return MatrixPoint(arr, field, structure)


def as_array(x):
    return x.entries if isinstance(x, MatrixPoint) else np.asarray(x)


def _check_compatible(a, b):
    if a.field != b.field or a.structure != b.structure or a.shape != b.shape:
        raise InputError(
            "incompatible matrix points: "
            f"({a.field}, {a.structure}, {a.shape}) vs ({b.field}, {b.structure}, {b.shape})"
        )


def frobenius_dist(a, b):
    """Outer distance ``sqrt(trace((A-B)(A-B)^H))``."""
    if isinstance(a, MatrixPoint) and isinstance(b, MatrixPoint):
        _check_compatible(a, b)
    x, y = as_array(a), as_array(b)
    if x.shape != y.shape:
        raise InputError(f"shape mismatch {x.shape} vs {y.shape}")
    return float(np.linalg.norm(x - y))


def singular_values(x):
    return np.linalg.svd(as_array(x), compute_uv=False)


def _check_tol(rank_tol):
    if not 0.0 < rank_tol < 1.0:
        raise InputError(f"rank_tol must lie in (0, 1), got {rank_tol}")


def numerical_rank(a, rank_tol=RANK_TOL):
    """Number of singular values above ``rank_tol * sigma_max``; 0 for the zero matrix."""
    _check_tol(rank_tol)
    s = singular_values(a)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > rank_tol * s[0]))


@dataclass(frozen=True, eq=False)
class BlockFrame:
    """Unitary change of frame ``X -> left^H X right``.

    For structured (congruence) frames ``right`` equals ``left`` and the map is
    ``X -> left^T X left``, which keeps symmetric and skew matrices in their
    space.  ``r0`` is the size of the leading block that carries the source
    matrix.
    """

    left: np.ndarray
    right: np.ndarray
    r0: int
    congruence: bool = False

    def __post_init__(self):
        for name in ("left", "right"):
            q = np.asarray(getattr(self, name))
            if q.ndim != 2 or q.shape[0] != q.shape[1]:
                raise InputError(f"{name} factor must be square")
            resid = np.abs(q @ q.conj().T - np.eye(q.shape[0])).max(initial=0.0)
            if resid > FRAME_TOL:
                raise InputError(f"{name} factor is not unitary (residual {resid:.3g})")
        if self.congruence and not np.array_equal(self.left, self.right):
            raise InputError("congruence frames need right == left")

    def apply(self, x):
        return self.left.conj().T @ np.asarray(x) @ self.right

    def unapply(self, y):
        return self.left @ np.asarray(y) @ self.right.conj().T

    def sign(self):
        """det(left^H) * det(right); the factor picked up by det under apply()."""
        return complex(np.conj(np.linalg.det(self.left)) * np.linalg.det(self.right))

    def to_json(self):
        return {
            "left": encode_entries(self.left),
            "right": encode_entries(self.right),
            "r0": self.r0,
            "congruence": self.congruence,
        }


def identity_frame(m, n, r0, congruence=False, dtype=float):
    return BlockFrame(np.eye(m, dtype=dtype), np.eye(n, dtype=dtype), r0, congruence)


def _offblock_max(x, r):
    out = 0.0
    if r < x.shape[1]:
        out = max(out, np.abs(x[:, r:]).max(initial=0.0))
    if r < x.shape[0]:
        out = max(out, np.abs(x[r:, :]).max(initial=0.0))
    return out


def frame_arrays(x, r, structure="general", other=None):
    """Orthonormal frame putting ``x`` (rank <= r) into its leading r x r block.

    Returns ``(left, right)`` with ``left^H x right`` supported in the top-left
    block; for structured matrices ``left is right`` (a congruence).  The
    singular vectors are ordered by decreasing singular value, so kernel
    directions come last.

    When ``x`` has rank ``k < r`` the leading block also holds ``r - k`` kernel
    directions.  With ``other`` given they are the dominant singular directions
    of ``other`` compressed to the kernels of ``x``, which makes the frame
    equivariant under unitary changes of both points.
    """
    x = np.asarray(x)
    scale = np.abs(x).max(initial=0.0)
    dtype = complex if np.iscomplexobj(x) or np.iscomplexobj(other) else float
    m, n = x.shape
    k = min(r, numerical_rank(x)) if scale > 0.0 else 0
    if other is None or k == r:
        if scale == 0.0 or _offblock_max(x, r) == 0.0:
            return np.eye(m, dtype=dtype), np.eye(n, dtype=dtype)
    try:
        if scale == 0.0:
            u, v = np.eye(m, dtype=dtype), np.eye(n, dtype=dtype)
        else:
            u, _, vh = np.linalg.svd(x)
            v = vh.conj().T
        if other is not None and k < r:
            if structure != "general":
                u = v
            c = u[:, k:].conj().T @ np.asarray(other) @ v[:, k:]
            p, _, qh = np.linalg.svd(c)
            u = np.hstack([u[:, :k], u[:, k:] @ p]).astype(dtype)
            v = np.hstack([v[:, :k], v[:, k:] @ qh.conj().T]).astype(dtype)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD failed during block reduction: {exc}") from exc
    if structure != "general":
        return v, v
    return u, v


def block_reduce(a, r, rank_tol=RANK_TOL):
    """Frame bringing ``a`` to ``A_inv (+) 0`` with the leading block of size r."""
    if not isinstance(a, MatrixPoint):
        a = make_point(a)
    if not 0 <= r <= min(a.shape):
        raise InputError(f"block size {r} out of range for shape {a.shape}")
    rank = numerical_rank(a, rank_tol)
    if rank > r:
        raise PreconditionError(f"rank {rank} exceeds requested block size {r}")
    left, right = frame_arrays(a.entries, r, a.structure)
    return BlockFrame(left, right, r, congruence=a.structure != "general")


def apply_frame(f, x):
    """Framed copy of ``x``; an isometry of the Frobenius metric."""
    arr = as_array(x)
    if arr.shape != (f.left.shape[0], f.right.shape[0]):
        raise InputError(f"frame of shape {(f.left.shape[0], f.right.shape[0])} cannot act on {arr.shape}")
    if isinstance(x, MatrixPoint):
        return make_point(f.apply(arr), x.field, x.structure)
    return f.apply(arr)


def inverse_frame(f, y):
    arr = as_array(y)
    if arr.shape != (f.left.shape[0], f.right.shape[0]):
        raise InputError(f"frame of shape {(f.left.shape[0], f.right.shape[0])} cannot act on {arr.shape}")
    if isinstance(y, MatrixPoint):
        return make_point(f.unapply(arr), y.field, y.structure)
    return f.unapply(arr)


@dataclass(frozen=True)
class ScaleBounds:
    lambda_min: float
    lambda_max: float

    def __post_init__(self):
        if not 0.0 <= self.lambda_min <= self.lambda_max:
            raise InputError(f"invalid scale bounds {self.lambda_min}, {self.lambda_max}")


def scale_bounds(c_left, c_right):
    """Bounds on the stretch of ``A -> C_l A C_r`` in the Frobenius norm.

    The map is ``kron`` of the two factors, whose singular values are all the
    pairwise products, hence the extreme products bound it exactly.
    """
    sl = singular_values(c_left)
    sr = singular_values(c_right)
    if sl[-1] <= 0.0 or sr[-1] <= 0.0:
        raise PreconditionError("scale_bounds needs invertible factors")
    return ScaleBounds(float(sl[-1] * sr[-1]), float(sl[0] * sr[0]))


def truncate_to_rank(a, r):
    """Frobenius-nearest matrix of rank <= r in the same space as ``a``."""
    if not isinstance(a, MatrixPoint):
        a = make_point(a)
    if not 0 <= r <= min(a.shape):
        raise InputError(f"rank {r} out of range for shape {a.shape}")
    x = a.entries
    if a.structure == "sym":
        w, q = np.linalg.eigh(x)
        keep = np.argsort(-np.abs(w), kind="stable")[:r]
        out = (q[:, keep] * w[keep]) @ q[:, keep].T
    else:
        if a.structure == "skew":
            r -= r % 2
        u, s, vh = np.linalg.svd(x)
        out = (u[:, :r] * s[:r]) @ vh[:r, :]
    return make_point(out, a.field, a.structure)


def encode_entries(x):
    x = np.asarray(x)
    if np.iscomplexobj(x):
        return [[[float(v.real), float(v.imag)] for v in row] for row in x]
    return [[float(v) for v in row] for row in x]


def point_to_json(a):
    return {
        "field": a.field,
        "structure": a.structure,
        "rows": a.m,
        "cols": a.n,
        "entries": encode_entries(a.entries),
    }


def point_from_json(obj):
    """Parse the matrix file schema; raises InputError on any violation."""
    if not isinstance(obj, dict):
        raise InputError("matrix file must hold a JSON object")
    missing = {"field", "structure", "rows", "cols", "entries"} - obj.keys()
    if missing:
        raise InputError(f"matrix file is missing keys {sorted(missing)}")
    field = obj["field"]
    if field not in FIELDS:
        raise InputError(f"field must be 'R' or 'C', got {field!r}")
    structure = obj["structure"]
    if structure not in STRUCTURES:
        raise InputError(f"structure must be one of {STRUCTURES}, got {structure!r}")
    rows, cols, entries = obj["rows"], obj["cols"], obj["entries"]
    if not (isinstance(rows, int) and isinstance(cols, int)) or rows < 1 or cols < 1:
        raise InputError("rows and cols must be positive integers")
    if not isinstance(entries, list) or len(entries) != rows:
        raise InputError(f"entries must be a list of {rows} rows")
    out = np.zeros((rows, cols), dtype=complex if field == "C" else float)
    for i, row in enumerate(entries):
        if not isinstance(row, list) or len(row) != cols:
            raise InputError(f"row {i} must have {cols} entries")
        for j, v in enumerate(row):
            if field == "C":
                if not (isinstance(v, list) and len(v) == 2):
                    raise InputError(f"complex entry ({i},{j}) must be a [re, im] pair")
                out[i, j] = complex(float(v[0]), float(v[1]))
            else:
                if isinstance(v, bool) or not isinstance(v, (int, float)):
                    raise InputError(f"real entry ({i},{j}) must be a number")
                out[i, j] = float(v)
    return MatrixPoint(out, field, structure)


def load_point(path):
    with open(path) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: invalid JSON ({exc})") from exc
    return point_from_json(obj)


def dump_point(a, path):
    with open(path, "w") as fh:
        json.dump(point_to_json(a), fh, indent=1)
