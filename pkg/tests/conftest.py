import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("lnemat", max_examples=40, deadline=None, derandomize=True)
settings.load_profile("lnemat")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_rank(rng, m, n, r, cplx=False):
    """Random m x n matrix of rank exactly r (almost surely)."""
    a = rng.standard_normal((m, r))
    b = rng.standard_normal((r, n))
    if cplx:
        a = a + 1j * rng.standard_normal((m, r))
        b = b + 1j * rng.standard_normal((r, n))
    return a @ b


def random_orthogonal(rng, n, cplx=False, special=False):
    g = rng.standard_normal((n, n))
    if cplx:
        g = g + 1j * rng.standard_normal((n, n))
    q, rr = np.linalg.qr(g)
    q = q * (np.diag(rr) / np.abs(np.diag(rr)))
    if special and not cplx and np.linalg.det(q) < 0:
        q[:, 0] *= -1
    return q
