"""Paths inside a rank stratum ``X_r`` that stay in one connected component.

Construction outline (all pieces are explicit segments):

* reduce to the leading ``r x r`` block in the frame of ``a`` by shrinking the
  other blocks of ``b``; a generic group-action nudge of ``b`` is inserted when
  its leading block is singular;
* general matrices with a spare row or column: join the leading blocks by the
  straight pencil, lifted into the spare row at each singular crossing;
* structured strata: a rotation connector is added when the two leading
  blocks sit in different components of the square stratum, then
  in the square stratum follow the straight segment where it is nonsingular;
  between the first and last singular points of the segment move inside the
  stratum one rank lower, pushed back into the right component by a small
  correction block ``eps(t)`` in the kernel directions;
* at isolated points where the corrected pencil still drops rank, splice in a
  short local detour built from block scalings that keep the Schur complement.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import eigvals

from ..errors import InputError, NumericalError, PreconditionError
from ..matcore import RANK_TOL, MatrixPoint, frame_arrays, make_point, numerical_rank, truncate_to_rank
from ..strata import (
    _canonical_general,
    _canonical_skew,
    _canonical_sym,
    classify_component,
    pfaffian_batch,
    rotation_log,
)
from .paths import FLOOR_TOL, SAMPLES, PiecewisePath, certify
from .segments import (
    BlockScaling,
    Embedded,
    EpsilonCorrected,
    Framed,
    Linear,
    Parametric,
    Reversed,
    Rotation,
    driving_polynomial,
)

EPS_REL = 1e-3
PERTURB_REL = 1e-6
PERTURB_RETRIES = 8
DEGENERATE_REL = 1e-9
ROOT_IMAG_TOL = 1e-7
ATTEMPTS = 4
EPS_GAIN = 1e4
BUMP_REL = 1e-3


class _Retry(Exception):
    pass


class SignatureViolation(_Retry):
    """The lower-rank pencil leaves the signatures reachable by one correction."""


_J = np.array([[0.0, 1.0], [-1.0, 0.0]])


def _drop(space):
    return 2 if space == "skew" else 1


def _unit(space):
    return _J if space == "skew" else np.ones((1, 1))


def _signature(x, tol=1e-12):
    w = np.linalg.eigvalsh(x)
    scale = np.abs(w).max(initial=0.0)
    return int(np.count_nonzero(w > tol * scale)), int(np.count_nonzero(w < -tol * scale))


def _sign_value(x, space):
    """det sign (general) or Pfaffian sign (skew) of a square block."""
    if x.shape[0] == 0:
        return 1.0
    if space == "skew":
        return float(np.sign(pfaffian_batch(x)[0]))
    return float(np.sign(np.linalg.det(x)))


def _blockdiag(x, y):
    k, j = x.shape[0], y.shape[0]
    out = np.zeros((k + j, k + j), dtype=np.result_type(x, y))
    out[:k, :k] = x
    out[k:, k:] = y
    return out


def _truncate(x, rank, space):
    return truncate_to_rank(make_point(x, structure=space), rank).entries


def _real_roots(poly):
    if poly.degree() < 1:
        return []
    out = []
    for z in poly.roots():
        if abs(z.imag) < ROOT_IMAG_TOL and 1e-12 < z.real < 1.0 - 1e-12:
            out.append(float(z.real))
    return sorted(out)


def _small_connect(s0, s1, space):
    """Segments joining two small nonsingular blocks of the same component.

    Each block is rotated (identity component of the orthogonal group) to its
    canonical diagonal form, the canonical forms are joined linearly, and the
    rotation is undone at the far end.
    """
    k = s0.shape[0]

    def canon(x):
        if space == "general":
            u, core, v = _canonical_general(x, k)
        elif space == "sym":
            u, core = _canonical_sym(x, k)
            v = u
        else:
            u, core = _canonical_skew(x, k)
            v = u
        return Rotation(core, u, rotation_log(u.T), v, rotation_log(v.T)), core

    rot0, c0 = canon(s0)
    rot1, c1 = canon(s1)
    return [rot0, Linear(c0, c1), Reversed(rot1)]


def _detour(p0, p1, m_star, g, space):
    """Short path from ``p0`` to ``p1`` around the lower-rank point ``m_star``.

    In the frame of ``m_star`` both ends are scaled, keeping their Schur
    complements fixed, to ``C11 (+) S``; the leading blocks are joined
    linearly and the small Schur blocks by ``_small_connect``.
    """
    k = p0.shape[0]
    if g == 0:
        return _small_connect(p0, p1, space)
    left, right = frame_arrays(m_star, g, space)
    c0 = left.T @ p0 @ right
    c1 = left.T @ p1 @ right

    def split(c):
        c11 = c[:g, :g]
        if np.linalg.cond(c11) > 1e8:
            raise _Retry("detour leading block is singular")
        kk = c[g:, :g] @ np.linalg.solve(c11, c[:g, g:])
        if space == "sym":
            kk = 0.5 * (kk + kk.T)
        elif space == "skew":
            kk = 0.5 * (kk - kk.T)
        s = c[g:, g:] - kk
        x = c.copy()
        x[g:, g:] = kk
        off = np.zeros_like(c)
        off[g:, g:] = s
        return c11, s, x, off

    a11, s0, x0, off0 = split(c0)
    b11, s1, x1, off1 = split(c1)
    segs = [BlockScaling(x0, g, 1.0, 0.0, offset=off0),
            Linear(_blockdiag(a11, s0), _blockdiag(b11, s0))]
    base = _blockdiag(b11, np.zeros((k - g, k - g)))
    segs += [Embedded(seg, base, g, g) for seg in _small_connect(s0, s1, space)]
    segs.append(Reversed(BlockScaling(x1, g, 1.0, 0.0, offset=off1)))
    return [Framed(seg, left, right) for seg in segs]


def _corrected(at, bt, space, eps0, sign, scale):
    """EpsilonCorrected pieces from ``bt (+) e(0)`` to ``at (+) e(1)`` with detours."""
    kind = "pf" if space == "skew" else "det"
    unit = _unit(space)
    poly = driving_polynomial(at, bt, kind, scale)
    roots = _real_roots(poly)
    k = at.shape[0] + unit.shape[0]
    g = at.shape[0] - _drop(space)
    if not roots:
        return [EpsilonCorrected(at, bt, unit, eps0, sign, poly, 0.0, 1.0, EPS_GAIN)], poly
    gaps = np.diff([0.0] + roots + [1.0])
    h = min(0.01, 0.3 * float(gaps.min()))
    segs = []
    u0 = 0.0
    for tau in roots:
        seg = EpsilonCorrected(at, bt, unit, eps0, sign, poly, u0, tau - h, EPS_GAIN)
        segs.append(seg)
        ep = EpsilonCorrected(at, bt, unit, eps0, sign, poly, tau - h, tau + h, EPS_GAIN)
        p0, p1 = ep.start, ep.end
        mid = ep.point(0.5)
        m_star = _truncate(mid, g, space) if g > 0 else np.zeros((k, k))
        segs += _detour(p0, p1, m_star, g, space)
        u0 = tau + h
    segs.append(EpsilonCorrected(at, bt, unit, eps0, sign, poly, u0, 1.0, EPS_GAIN))
    return segs, poly


def _square_real(b, a, space, eps0):
    """Segments from ``b`` to ``a`` inside the component of ``a`` in ``GL``-type strata."""
    k = a.shape[0]
    if k == 0 or np.array_equal(a, b):
        return []
    kind = "pf" if space == "skew" else "det"
    scale = max(np.linalg.norm(a), np.linalg.norm(b))
    roots = _real_roots(driving_polynomial(a, b, kind, scale))
    if not roots:
        return [Linear(b, a)]
    d = _drop(space)
    j = k - d
    t_f, t_l = roots[0], roots[-1]
    b1 = _truncate(t_f * a + (1 - t_f) * b, j, space)
    a1 = _truncate(t_l * a + (1 - t_l) * b, j, space)
    left, right = frame_arrays(a1, j, space)
    if space != "general":
        right = left
    fa = left.T @ a1 @ right
    fb = left.T @ b1 @ right
    at, bt = fa[:j, :j].copy(), fb[:j, :j].copy()
    if space == "sym":
        at, bt = 0.5 * (at + at.T), 0.5 * (bt + bt.T)
    elif space == "skew":
        at, bt = 0.5 * (at - at.T), 0.5 * (bt - bt.T)
    if j > 0 and np.linalg.svd(bt, compute_uv=False)[-1] < DEGENERATE_REL * scale:
        raise _Retry("reduced block of the first crossing is singular")
    unit = _unit(space)

    if space == "sym":
        p, q = _signature(a)
        allowed = {(p - 1, q): 1.0, (p, q - 1): -1.0}
        sb, sa = _signature(bt), _signature(at)
        if sb not in allowed or sa not in allowed:
            raise _Retry("unexpected signature at a crossing")
        same = sb == sa
        e_sign = allowed[sb]
        c = (-1.0) ** q
    else:
        frame_sign = float(np.sign(np.linalg.det(left) * (np.linalg.det(right) if space == "general" else 1.0)))
        target = _sign_value(a, space)
        sb, sa = _sign_value(bt, space), _sign_value(at, space)
        same = sb == sa
        c = target * frame_sign
        e_sign = c * sb

    if same:
        e_b = e_a = e_sign * eps0
        inner = _square_real(bt, at, space, eps0)
        corner = _blockdiag(np.zeros_like(bt), e_b * unit)
        mids = [Embedded(seg, corner, 0, 0) for seg in inner]
    else:
        sub_scale = max(np.linalg.norm(at), np.linalg.norm(bt))
        mids, poly = _corrected(at, bt, space, eps0, c, sub_scale)
        if space == "sym":
            cuts = [0.0] + _real_roots(poly) + [1.0]
            for lo, hi in zip(cuts, cuts[1:]):
                u = 0.5 * (lo + hi)
                if _signature(u * at + (1 - u) * bt) not in allowed:
                    raise SignatureViolation("pencil signature cannot be corrected by one block")
        e_b, e_a = mids[0].eps(0.0), mids[-1].eps(1.0)
    eb = _blockdiag(np.zeros_like(bt), e_b * unit)

    def unframe(x):
        return left @ x @ right.T

    segs = [Linear(b, unframe(fb + eb)),
            Framed(BlockScaling(fb, j, 1.0, 0.0, offset=eb), left, right)]
    segs += [Framed(s, left, right) for s in mids]
    segs.append(Linear(unframe(_blockdiag(at, e_a * unit)), a))
    return segs


def _square_complex(b, a, eps0, rng):
    """Straight segment, bent near the (rare) real crossings of the singular set."""
    if np.array_equal(a, b):
        return []
    with np.errstate(all="ignore"):
        ts = eigvals(b, b - a)
    near = sorted(float(t.real) for t in ts
                  if np.isfinite(t) and abs(t.imag) < 1e-6 and 0.0 < t.real < 1.0)
    if not near:
        return [Linear(b, a)]
    rho = 10.0 * eps0
    pts = [b]
    for t in near:
        d = rng.standard_normal(a.shape) + 1j * rng.standard_normal(a.shape)
        pts.append(t * a + (1 - t) * b + rho * d / np.linalg.norm(d))
    pts.append(a)
    return [Linear(p, q) for p, q in zip(pts, pts[1:])]


def _perturb(y, space, rng, eta):
    """Group-action nudge ``(I + t eta G) y (I + t eta H)^T`` (H = G for congruences)."""
    m, n = y.shape
    cplx = np.iscomplexobj(y)

    def draw(k):
        g = rng.standard_normal((k, k))
        if cplx:
            g = g + 1j * rng.standard_normal((k, k))
        return g / np.linalg.norm(g)

    g = draw(m)
    h = g if space != "general" else draw(n)

    def func(t):
        return (np.eye(m) + t * eta * g) @ y @ (np.eye(n) + t * eta * h).T

    def deriv(t):
        return eta * g @ y @ (np.eye(n) + t * eta * h).T + (np.eye(m) + t * eta * g) @ y @ (eta * h).T

    return Parametric(func, deriv, label="generic perturbation"), func(1.0)


def _flip_connector(block, r, shape, space):
    """Cheapest rotation by pi in a plane (e_i, e_r) flipping the det/Pfaffian sign.

    Rows are rotated into a spare row (or columns into a spare column; both
    for the skew congruence).  Returns ``(segment, flipped_block)``; the
    segment runs from ``block (+) 0`` to ``flipped (+) 0``.
    """
    m, n = shape
    y = np.zeros(shape)
    y[:r, :r] = block
    options = []
    if m > r:
        rows = np.linalg.norm(block, axis=1)
        i = int(np.argmin(rows))
        options.append((rows[i], "row", i))
    if space == "general" and n > r:
        cols = np.linalg.norm(block, axis=0)
        j = int(np.argmin(cols))
        options.append((cols[j], "col", j))
    _, side, i = min(options)
    flipped = block.copy()
    if side == "col":
        w = np.zeros((n, n))
        w[i, r], w[r, i] = -np.pi, np.pi
        flipped[:, i] *= -1
        return Rotation(y, np.eye(m), np.zeros((m, m)), np.eye(n), w), flipped
    w = np.zeros((m, m))
    w[i, r], w[r, i] = -np.pi, np.pi
    flipped[i, :] *= -1
    if space == "skew":
        flipped[:, i] *= -1
        return Rotation(y, np.eye(m), w, np.eye(n), w), flipped
    return Rotation(y, np.eye(m), w), flipped


def _bumped_pencil(bt, at, shape):
    """Straight pencil ``bt -> at`` in the leading block, lifted off singular crossings.

    At each real crossing ``t_i`` the block has a null vector ``k``; the path
    detours through ``P(t_i) (+) h k^H`` in a spare row (or ``h k`` in a spare
    column), which keeps exactly ``r`` independent columns (rows).  Every
    piece is a straight segment, so the overshoot is ``2 h`` per crossing.
    """
    m, n = shape
    r = at.shape[0]
    with np.errstate(all="ignore"):
        ts = eigvals(bt, bt - at)
    roots = sorted(float(t.real) for t in ts
                   if np.isfinite(t) and abs(t.imag) < ROOT_IMAG_TOL and 1e-12 < t.real < 1.0 - 1e-12)

    def lift(t, h=0.0, k=None):
        out = np.zeros(shape, dtype=np.result_type(at, bt))
        out[:r, :r] = t * at + (1 - t) * bt
        if h:
            if m > r:
                out[r, :r] = h * k.conj()
            else:
                out[:r, r] = h * k
        return out

    if not roots:
        return [Linear(lift(0.0), lift(1.0))]
    gaps = np.diff([0.0] + roots + [1.0])
    delta = min(0.05, 0.3 * float(gaps.min()))
    h = BUMP_REL * float(np.linalg.norm(at - bt))
    pts = [lift(0.0)]
    for t in roots:
        u, _, vh = np.linalg.svd(t * at + (1 - t) * bt)
        k = vh[-1].conj() if m > r else u[:, -1]
        pts += [lift(t - delta), lift(t, h, k), lift(t + delta)]
    pts.append(lift(1.0))
    return [Linear(p, q) for p, q in zip(pts, pts[1:])]


def _square(b, a, space, field, eps0, rng):
    if field == "C":
        return _square_complex(b, a, eps0, rng)
    return _square_real(b, a, space, eps0)


def _build(x, y, s, eps0, rng):
    m, n, r = s.m, s.n, s.r
    if r == m == n:
        return _square(y, x, s.space, s.field, eps0, rng)
    segs = []
    left, right = frame_arrays(x, r, s.space)
    if s.space != "general":
        right = left
    lh = left.conj().T
    fx = lh @ x @ right
    fy = lh @ y @ right
    scale = max(np.linalg.norm(x), np.linalg.norm(y))
    eta = PERTURB_REL
    tries = 0
    while np.linalg.svd(fy[:r, :r], compute_uv=False)[-1] < DEGENERATE_REL * scale:
        if tries >= PERTURB_RETRIES:
            raise NumericalError("generic perturbation did not regularize the reduced block")
        seg, y_new = _perturb(y, s.space, rng, eta)
        fy_new = lh @ y_new @ right
        tries += 1
        eta *= 0.5
        if np.linalg.svd(fy_new[:r, :r], compute_uv=False)[-1] >= DEGENERATE_REL * scale:
            segs.append(seg)
            y, fy = y_new, fy_new
    at, bt = fx[:r, :r].copy(), fy[:r, :r].copy()
    if s.space == "sym":
        at, bt = 0.5 * (at + at.T), 0.5 * (bt + bt.T)
    elif s.space == "skew":
        at, bt = 0.5 * (at - at.T), 0.5 * (bt - bt.T)
    framed = []
    mid = np.zeros_like(fy)
    mid[:r, :r] = bt
    if np.any(fy - mid):
        x0 = fy.copy()
        framed.append(BlockScaling(x0, r, 1.0, 0.0))
    if s.space == "general":
        framed += _bumped_pencil(bt, at, (m, n))
        return segs + [Framed(seg, left, right) for seg in framed]
    if s.field == "R" and s.space != "sym" and _sign_value(bt, s.space) != _sign_value(at, s.space):
        seg_b, bt_flip = _flip_connector(bt, r, (m, n), s.space)
        seg_a, at_flip = _flip_connector(at, r, (m, n), s.space)
        if seg_b.length() <= seg_a.length():
            framed.append(seg_b)
            bt = bt_flip
            tail = []
        else:
            tail = [seg_a.reversed()]
            at = at_flip
    else:
        tail = []
    base = np.zeros_like(fy)
    framed += [Embedded(seg, base, 0, 0) for seg in _square(bt, at, s.space, s.field, eps0, rng)]
    framed += tail
    segs += [Framed(seg, left, right) for seg in framed]
    return segs


def stratum_path(a, b, s, seed=0, rank_tol=RANK_TOL, floor_tol=FLOOR_TOL, samples=SAMPLES,
                 certify_path=True):
    """Path from ``b`` to ``a`` inside the rank-``r`` stratum, within one component.

    Raises PreconditionError when the points have the wrong rank or sit in
    different components, and NumericalError when no attempt certifies.
    """
    s = s.with_mode("stratum")
    pts = []
    for name, p in (("a", a), ("b", b)):
        if not isinstance(p, MatrixPoint):
            p = make_point(p, s.field, s.space)
        if p.shape != (s.m, s.n) or p.structure != s.space:
            raise InputError(f"{name} does not live in the space of the stratum")
        rank = numerical_rank(p, rank_tol)
        if rank != s.r:
            raise PreconditionError(f"{name} has numerical rank {rank}, expected {s.r}")
        pts.append(p)
    la = classify_component(pts[0], s, rank_tol)
    lb = classify_component(pts[1], s, rank_tol)
    if la != lb:
        raise PreconditionError(f"points lie in different components: {la} vs {lb}")
    x, y = pts[0].entries, pts[1].entries
    if np.array_equal(x, y):
        path = PiecewisePath([], stratum=s, point=x)
        if certify_path:
            certify(path, s, samples, floor_tol=floor_tol, rank_tol=rank_tol, label=la)
        return path
    rng = np.random.default_rng(seed)
    eps0 = EPS_REL * max(np.linalg.norm(x), np.linalg.norm(y))
    last = None
    for attempt in range(ATTEMPTS):
        try:
            segs = _build(x, y, s, eps0, rng)
        except (_Retry, np.linalg.LinAlgError) as exc:
            last = str(exc) or type(exc).__name__
            eps0 *= 0.5
            continue
        path = PiecewisePath(segs, stratum=s, meta={"eps0": eps0, "attempts": attempt + 1})
        if not certify_path:
            return path
        cert = certify(path, s, samples, floor_tol=floor_tol, rank_tol=rank_tol, label=la)
        if cert.valid:
            return path
        last = cert.reason
        eps0 *= 0.5
    raise NumericalError(f"stratum path construction failed: {last}")
