"""Product and cone constructions built from certified factor paths."""

from __future__ import annotations

import numpy as np

from ..errors import InputError
from .paths import PiecewisePath
from .segments import Embedded, Linear, Segment

JOIN_TOL = 1e-10


def _blockdiag(x, y):
    (mx, nx), (my, ny) = x.shape, y.shape
    out = np.zeros((mx + my, nx + ny), dtype=np.result_type(x, y))
    out[:mx, :nx] = x
    out[mx:, nx:] = y
    return out


def product_point(x, y):
    """The pair ``(x, y)`` as ``blockdiag(x, y)``; Frobenius distance is the product metric."""
    return _blockdiag(np.asarray(x), np.asarray(y))


def product_path(path_x, path_y, joint_endpoints=None):
    """Two-leg path ``(x1, y1) -> (x1, y2) -> (x2, y2)`` in the product.

    Points of the product are block-diagonal matrices.  The length is the sum
    of the leg lengths, so when the legs realize constants ``K_X`` and ``K_Y``
    the product ratio is at most ``K_X + K_Y`` (stored in ``meta['bound']``).
    ``joint_endpoints``, when given as ``((x1, y1), (x2, y2))``, is checked
    against the legs.
    """
    x1, x2 = np.asarray(path_x.start), np.asarray(path_x.end)
    y1, y2 = np.asarray(path_y.start), np.asarray(path_y.end)
    if joint_endpoints is not None:
        (ex1, ey1), (ex2, ey2) = joint_endpoints
        for got, want in ((x1, ex1), (y1, ey1), (x2, ex2), (y2, ey2)):
            want = np.asarray(want)
            if got.shape != want.shape or np.linalg.norm(got - want) > JOIN_TOL * max(1.0, np.linalg.norm(want)):
                raise InputError("leg endpoints do not match the requested product endpoints")
    mx, nx = x1.shape
    segs = []
    base_y = _blockdiag(x1, np.zeros_like(y1))
    segs += [Embedded(s, base_y, mx, nx) for s in path_y.segments]
    base_x = _blockdiag(np.zeros_like(x1), y2)
    segs += [Embedded(s, base_x, 0, 0) for s in path_x.segments]
    dx, dy = float(np.linalg.norm(x2 - x1)), float(np.linalg.norm(y2 - y1))
    kx = path_x.total_length / dx if dx > 0 else 1.0
    ky = path_y.total_length / dy if dy > 0 else 1.0
    meta = {"leg_constant_x": kx, "leg_constant_y": ky, "bound": kx + ky}
    return PiecewisePath(segs, point=_blockdiag(x1, y1), meta=meta)


class Scaled(Segment):
    """Inner segment multiplied by a positive constant (lengths scale too)."""

    def __init__(self, inner, factor):
        self.inner = inner
        self.factor = float(factor)
        self.kind = inner.kind

    def sample(self, ts):
        return self.factor * self.inner.sample(ts)

    def length(self):
        return self.factor * self.inner.length()


def cone_path(x, y, link_provider):
    """Path from ``y`` to ``x`` on a cone with vertex 0.

    The larger-norm endpoint is moved radially to the sphere of the smaller
    one; the remaining gap is closed by ``link_provider(p, q)``, which returns
    a PiecewisePath between unit-norm points of the link.  With link constant
    ``K_M`` the length is at most ``(K_M + 1) |x - y|``; the measured link
    constant is stored in ``meta['link_constant']``.
    """
    x, y = np.asarray(x), np.asarray(y)
    if x.shape != y.shape:
        raise InputError("cone points differ in shape")
    nx, ny = float(np.linalg.norm(x)), float(np.linalg.norm(y))
    if np.array_equal(x, y):
        return PiecewisePath([], point=x, meta={"link_constant": 1.0, "bound": 1.0})
    if nx == 0.0 or ny == 0.0:
        return PiecewisePath([Linear(y, x)], meta={"link_constant": 1.0, "bound": 1.0})
    rho = min(nx, ny)
    y_on = y * (rho / ny)
    x_on = x * (rho / nx)
    segs = []
    if ny > nx:
        segs.append(Linear(y, y_on))
    link = link_provider(y_on / rho, x_on / rho)
    gap = float(np.linalg.norm(x_on - y_on))
    link_len = rho * link.total_length
    segs += [Scaled(s, rho) for s in link.segments]
    if nx > ny:
        segs.append(Linear(x_on, x))
    km = link_len / gap if gap > 0 else 1.0
    return PiecewisePath(segs, point=x, meta={"link_constant": km, "bound": km + 1.0})
