"""Path segments: parametrized curves on [0, 1] with exact or quadrature lengths.

Every segment maps ``t in [0, 1]`` to a matrix; ``sample`` is vectorized over
``t`` and returns an array of shape ``(len(ts), m, n)``.
"""

from __future__ import annotations

import numpy as np
from numpy.polynomial import Chebyshev
from scipy.integrate import quad

from ..matcore import encode_entries

QUAD_TOL = 1e-10


def _quad_length(speed, breakpoints=()):
    pts = sorted(p for p in breakpoints if 0.0 < p < 1.0)
    val, _ = quad(speed, 0.0, 1.0, epsabs=QUAD_TOL, epsrel=1e-12, limit=400,
                  points=pts or None)
    return float(val)


class Segment:
    """Base class; subclasses implement ``sample`` and ``length``."""

    kind = "segment"

    def sample(self, ts):
        raise NotImplementedError

    def length(self):
        raise NotImplementedError

    def point(self, t):
        return self.sample(np.array([float(t)]))[0]

    @property
    def start(self):
        return self.point(0.0)

    @property
    def end(self):
        return self.point(1.0)

    def reversed(self):
        return Reversed(self)

    def describe(self):
        return {"kind": self.kind, "length": self.length()}


class Linear(Segment):
    """Straight segment ``(1 - t) p + t q``."""

    kind = "linear"

    def __init__(self, p, q):
        self.p = np.asarray(p)
        self.q = np.asarray(q)
        if self.p.shape != self.q.shape:
            raise ValueError("segment endpoints differ in shape")

    def sample(self, ts):
        ts = np.asarray(ts, dtype=float)[:, None, None]
        return (1.0 - ts) * self.p + ts * self.q

    def length(self):
        return float(np.linalg.norm(self.q - self.p))


def block_scaling_primitive(tau, c, q):
    """Antiderivative of ``sqrt(c + 4 q tau^2)`` vanishing at 0 (tau >= 0)."""
    if q <= 0.0:
        return np.sqrt(c) * tau
    if c <= 0.0:
        return np.sqrt(q) * tau * tau
    rq = np.sqrt(q)
    return 0.5 * tau * np.sqrt(c + 4.0 * q * tau * tau) + c / (4.0 * rq) * np.arcsinh(2.0 * rq * tau / np.sqrt(c))


class BlockScaling(Segment):
    """``tau -> [[X11, tau X12], [tau X21, tau^2 X22]] + offset``, tau from tau0 to tau1.

    The speed in tau is ``sqrt(c + 4 q tau^2)`` with ``c = |X12|^2 + |X21|^2``
    and ``q = |X22|^2``, which integrates in closed form.
    """

    kind = "block_scaling"

    def __init__(self, x, r, tau0=1.0, tau1=0.0, offset=None):
        self.x = np.asarray(x)
        self.r = int(r)
        if tau0 < 0 or tau1 < 0:
            raise ValueError("block scaling parameters must be nonnegative")
        self.tau0, self.tau1 = float(tau0), float(tau1)
        self.offset = None if offset is None else np.asarray(offset)
        r = self.r
        self.c = float(np.linalg.norm(self.x[:r, r:]) ** 2 + np.linalg.norm(self.x[r:, :r]) ** 2)
        self.q = float(np.linalg.norm(self.x[r:, r:]) ** 2)

    def sample(self, ts):
        ts = np.asarray(ts, dtype=float)
        tau = self.tau0 + ts * (self.tau1 - self.tau0)
        r = self.r
        out = np.broadcast_to(self.x, (len(ts),) + self.x.shape).copy()
        out[:, :r, r:] *= tau[:, None, None]
        out[:, r:, :r] *= tau[:, None, None]
        out[:, r:, r:] *= (tau * tau)[:, None, None]
        if self.offset is not None:
            out += self.offset
        return out

    def length(self):
        g = block_scaling_primitive
        return float(abs(g(self.tau1, self.c, self.q) - g(self.tau0, self.c, self.q)))

    def describe(self):
        return {"kind": self.kind, "length": self.length(), "block": self.r,
                "c": self.c, "q": self.q, "tau": [self.tau0, self.tau1]}


def driving_polynomial(a1, b1, kind, scale):
    """Chebyshev interpolant of ``D(t a1 + (1 - t) b1) / scale^deg`` on [0, 1].

    ``D`` is det (kind 'det') or the Pfaffian (kind 'pf'); the interpolant is
    exact because ``D`` restricted to a pencil is a polynomial of degree
    ``k`` (det) or ``k/2`` (Pfaffian).
    """
    from ..strata import pfaffian_batch

    a1, b1 = np.asarray(a1), np.asarray(b1)
    k = a1.shape[0]
    if k == 0:
        return Chebyshev([1.0], domain=[0.0, 1.0])
    deg = k // 2 if kind == "pf" else k

    def f(ts):
        ts = np.asarray(ts, dtype=float)[:, None, None]
        mats = (ts * a1 + (1.0 - ts) * b1) / scale
        if kind == "pf":
            return pfaffian_batch(mats)
        return np.real(np.linalg.det(mats))

    return Chebyshev.interpolate(f, deg, domain=[0.0, 1.0])


class EpsilonCorrected(Segment):
    """Pencil block plus a correction block driven by the pencil's determinant.

    ``P(t) = blockdiag(u A1 + (1 - u) B1, eps(u) * unit)`` with
    ``u = u0 + t (u1 - u0)`` and ``eps(u) = eps0 * sign * d(u) / (1 + |d(u)|)``,
    where ``d`` is ``gain`` times the scaled det or Pfaffian of the pencil.
    ``eps`` vanishes exactly where the pencil is singular and never exceeds
    ``eps0``; a large gain makes it saturate quickly away from the roots.
    """

    kind = "epsilon_corrected"

    def __init__(self, a1, b1, unit, eps0, sign, poly, u0=0.0, u1=1.0, gain=1.0):
        self.a1, self.b1 = np.asarray(a1), np.asarray(b1)
        poly = gain * poly
        self.unit = np.asarray(unit)
        self.eps0, self.sign = float(eps0), float(sign)
        self.poly = poly
        self.dpoly = poly.deriv()
        self.u0, self.u1 = float(u0), float(u1)
        k, j = self.a1.shape[0], self.unit.shape[0]
        self.shape = (k + j, k + j)

    def eps(self, u):
        d = self.poly(u)
        return self.eps0 * self.sign * d / (1.0 + np.abs(d))

    def deps(self, u):
        d = self.poly(u)
        return self.eps0 * self.sign * self.dpoly(u) / (1.0 + np.abs(d)) ** 2

    def sample(self, ts):
        ts = np.asarray(ts, dtype=float)
        u = self.u0 + ts * (self.u1 - self.u0)
        k = self.a1.shape[0]
        dtype = np.result_type(self.a1, self.b1, self.unit)
        out = np.zeros((len(ts),) + self.shape, dtype=dtype)
        out[:, :k, :k] = u[:, None, None] * self.a1 + (1.0 - u)[:, None, None] * self.b1
        out[:, k:, k:] = self.eps(u)[:, None, None] * self.unit
        return out

    def length(self):
        da = float(np.linalg.norm(self.a1 - self.b1))
        nu = float(np.linalg.norm(self.unit))
        span = abs(self.u1 - self.u0)

        def speed(t):
            u = self.u0 + t * (self.u1 - self.u0)
            return span * np.hypot(da, nu * self.deps(u))

        roots = [(r.real - self.u0) / (self.u1 - self.u0) for r in self.poly.roots()
                 if abs(r.imag) < 1e-9] if self.u1 != self.u0 else []
        return _quad_length(speed, roots)

    def describe(self):
        return {"kind": self.kind, "length": self.length(), "eps0": self.eps0,
                "sign": self.sign, "u": [self.u0, self.u1]}


def _skew_hermitian_exp(omega):
    """Return ``f(ts)`` evaluating ``expm(t * omega)`` for a batch of t."""
    h = 1j * np.asarray(omega)
    h = 0.5 * (h + h.conj().T)
    w, v = np.linalg.eigh(h)
    vh = v.conj().T

    def f(ts):
        phase = np.exp(-1j * np.outer(ts, w))
        return np.einsum("ij,tj,jk->tik", v, phase, vh)

    return f


class Rotation(Segment):
    """``t -> L0 expm(t Wl) M expm(t Wr)^H R0^H`` with skew-Hermitian generators.

    Both factors stay in the identity component of the orthogonal or unitary
    group, so ranks, det signs, Pfaffian signs and signatures (for
    congruences, ``R0 = L0`` and ``Wr = Wl``) are preserved.  The speed is the
    constant ``|Wl M - M Wr|``.
    """

    kind = "rotation"

    def __init__(self, core, left0, omega_l, right0=None, omega_r=None):
        self.core = np.asarray(core)
        m, n = self.core.shape
        self.left0 = np.asarray(left0)
        self.omega_l = np.asarray(omega_l)
        self.right0 = np.eye(n) if right0 is None else np.asarray(right0)
        self.omega_r = np.zeros((n, n)) if omega_r is None else np.asarray(omega_r)
        self._el = _skew_hermitian_exp(self.omega_l)
        self._er = _skew_hermitian_exp(self.omega_r)
        self._real = not any(np.iscomplexobj(z) for z in
                             (self.core, self.left0, self.omega_l, self.right0, self.omega_r))

    def sample(self, ts):
        ts = np.asarray(ts, dtype=float)
        el = self._el(ts)
        er = self._er(ts)
        out = self.left0 @ el @ self.core @ np.conj(np.swapaxes(er, 1, 2)) @ self.right0.conj().T
        return out.real if self._real else out

    def length(self):
        return float(np.linalg.norm(self.omega_l @ self.core - self.core @ self.omega_r))

    def describe(self):
        return {"kind": self.kind, "length": self.length()}


class Parametric(Segment):
    """Fallback segment given by a callable ``t -> matrix``; length by quadrature.

    ``deriv`` (optional) returns the velocity; otherwise central differences
    are used.
    """

    kind = "parametric"

    def __init__(self, func, deriv=None, label="", breakpoints=()):
        self.func = func
        self.deriv = deriv
        self.label = label
        self.breakpoints = tuple(breakpoints)
        self._length = None

    def sample(self, ts):
        return np.array([np.asarray(self.func(float(t))) for t in np.asarray(ts, dtype=float)])

    def _velocity(self, t):
        if self.deriv is not None:
            return np.asarray(self.deriv(t))
        h = 1e-6
        lo, hi = max(0.0, t - h), min(1.0, t + h)
        return (np.asarray(self.func(hi)) - np.asarray(self.func(lo))) / (hi - lo)

    def length(self):
        if self._length is None:
            self._length = _quad_length(lambda t: float(np.linalg.norm(self._velocity(t))),
                                        self.breakpoints)
        return self._length

    def describe(self):
        return {"kind": self.kind, "length": self.length(), "label": self.label}


class Framed(Segment):
    """Inner segment mapped back through a unitary frame: ``left Y right^H``."""

    def __init__(self, inner, left, right):
        self.inner = inner
        self.left = np.asarray(left)
        self.right_h = np.asarray(right).conj().T
        self._real = not (np.iscomplexobj(self.left) or np.iscomplexobj(self.right_h))
        self.kind = inner.kind

    def sample(self, ts):
        y = self.inner.sample(ts)
        out = self.left @ y @ self.right_h
        return out

    def length(self):
        return self.inner.length()

    def describe(self):
        d = self.inner.describe()
        d["framed"] = True
        return d


class Embedded(Segment):
    """Inner segment written into a block of a fixed ambient matrix."""

    def __init__(self, inner, base, row0=0, col0=0):
        self.inner = inner
        self.base = np.asarray(base)
        self.row0, self.col0 = int(row0), int(col0)
        self.kind = inner.kind

    def sample(self, ts):
        y = self.inner.sample(ts)
        k, l = y.shape[1:]
        dtype = np.result_type(self.base, y)
        out = np.broadcast_to(self.base, (len(y),) + self.base.shape).astype(dtype, copy=True)
        out[:, self.row0:self.row0 + k, self.col0:self.col0 + l] = y
        return out

    def length(self):
        return self.inner.length()

    def describe(self):
        d = self.inner.describe()
        d["embedded_at"] = [self.row0, self.col0]
        return d


class Reversed(Segment):
    def __init__(self, inner):
        self.inner = inner
        self.kind = inner.kind

    def sample(self, ts):
        return self.inner.sample(1.0 - np.asarray(ts, dtype=float))

    def length(self):
        return self.inner.length()

    def reversed(self):
        return self.inner

    def describe(self):
        d = self.inner.describe()
        d["reversed"] = True
        return d


class Mapped(Segment):
    """Inner segment pushed through the linear map ``A -> C_l A C_r``.

    The length is recomputed by quadrature since the map is not an isometry.
    """

    kind = "mapped"

    def __init__(self, inner, c_left, c_right):
        self.inner = inner
        self.c_left, self.c_right = np.asarray(c_left), np.asarray(c_right)
        self._length = None

    def sample(self, ts):
        return self.c_left @ self.inner.sample(ts) @ self.c_right

    def length(self):
        if self._length is None:
            def speed(t):
                h = 1e-6
                lo, hi = max(0.0, t - h), min(1.0, t + h)
                y = self.sample(np.array([lo, hi]))
                return float(np.linalg.norm(y[1] - y[0]) / (hi - lo))
            self._length = _quad_length(speed)
        return self._length


def segment_to_json(seg):
    d = seg.describe()
    d["start"] = encode_entries(seg.start)
    d["end"] = encode_entries(seg.end)
    return d
