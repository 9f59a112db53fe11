import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_orthogonal, random_rank
from lnemat.errors import InputError, PreconditionError
from lnemat.matcore import (
    BlockFrame,
    MatrixPoint,
    apply_frame,
    block_reduce,
    dump_point,
    frobenius_dist,
    identity_frame,
    inverse_frame,
    load_point,
    make_point,
    numerical_rank,
    point_from_json,
    point_to_json,
    scale_bounds,
    singular_values,
    truncate_to_rank,
)


def test_distance_to_self_is_zero():
    a = make_point(np.arange(6.0).reshape(2, 3))
    assert frobenius_dist(a, a) == 0.0


def test_distance_zero_to_identity():
    assert frobenius_dist(make_point(np.zeros((2, 2))), make_point(np.eye(2))) == pytest.approx(np.sqrt(2))


def test_distance_three_four_five():
    assert frobenius_dist(make_point(np.diag([3.0, 0])), make_point(np.diag([0, 4.0]))) == 5.0


def test_distance_mismatch_rejected():
    with pytest.raises(InputError):
        frobenius_dist(make_point(np.eye(2)), make_point(np.eye(3)))
    with pytest.raises(InputError):
        frobenius_dist(make_point(np.eye(2)), make_point(np.eye(2), structure="sym"))
    with pytest.raises(InputError):
        frobenius_dist(make_point(np.eye(2)), make_point(np.eye(2) * 1j))


@given(st.integers(0, 10_000))
def test_distance_is_a_metric(seed):
    rng = np.random.default_rng(seed)
    x, y, z = (make_point(rng.standard_normal((3, 2))) for _ in range(3))
    dxy, dyz, dxz = frobenius_dist(x, y), frobenius_dist(y, z), frobenius_dist(x, z)
    assert dxy >= 0 and dxy == frobenius_dist(y, x)
    assert dxz <= dxy + dyz + 1e-12


def test_numerical_rank_examples():
    assert numerical_rank(make_point(np.eye(3)), 1e-9) == 3
    assert numerical_rank(make_point(np.zeros((3, 3))), 1e-9) == 0
    assert numerical_rank(make_point(np.diag([1.0, 1e-12])), 1e-9) == 1


def test_numerical_rank_tolerance_validated():
    with pytest.raises(InputError):
        numerical_rank(make_point(np.eye(2)), 0.0)
    with pytest.raises(InputError):
        numerical_rank(make_point(np.eye(2)), 1.0)


def test_point_is_immutable_and_checks_structure():
    p = make_point(np.eye(2))
    with pytest.raises(ValueError):
        p.entries[0, 0] = 3.0
    with pytest.raises(InputError):
        MatrixPoint(np.array([[0.0, 1.0], [0.0, 0.0]]), "R", "sym")
    with pytest.raises(InputError):
        MatrixPoint(np.ones((2, 3)), "R", "skew")
    with pytest.raises(InputError):
        make_point(np.eye(2) * 1j, "R")
    with pytest.raises(InputError):
        make_point(np.array([[np.nan]]))
    s = make_point(np.array([[1.0, 2.0], [2.0 + 1e-15, 1.0]]), structure="sym")
    assert np.array_equal(s.entries, s.entries.T)


def test_block_reduce_permutation_example():
    f = block_reduce(make_point(np.diag([0.0, 5.0])), 1)
    y = apply_frame(f, make_point(np.diag([0.0, 5.0]))).entries
    assert abs(y[0, 0]) == pytest.approx(5.0)
    assert np.allclose(y.reshape(-1)[1:], 0.0)


def test_block_reduce_accepts_reduced_input():
    a = np.zeros((3, 3))
    a[:2, :2] = [[1.0, 2.0], [3.0, 4.0]]
    f = block_reduce(make_point(a), 2)
    assert np.array_equal(f.left, np.eye(3)) and np.array_equal(f.right, np.eye(3))


@pytest.mark.parametrize("structure", ["general", "sym", "skew"])
def test_block_reduce_random(rng, structure):
    n = 4
    if structure == "general":
        a = random_rank(rng, 4, 3, 2)
    else:
        h = rng.standard_normal((n, 2))
        core = np.diag([1.5, -0.7]) if structure == "sym" else np.array([[0.0, 1.3], [-1.3, 0.0]])
        a = h @ core @ h.T
    p = make_point(a, structure=structure)
    r = numerical_rank(p)
    f = block_reduce(p, r)
    for q in (f.left, f.right):
        assert np.abs(q @ q.T - np.eye(q.shape[0])).max() < 1e-10
    y = apply_frame(f, p).entries
    sv = singular_values(y)
    assert sv[r] <= 1e-9 * sv[0]
    assert np.abs(y[r:, :]).max(initial=0) < 1e-9 * sv[0]
    assert np.abs(y[:, r:]).max(initial=0) < 1e-9 * sv[0]
    if structure != "general":
        assert f.congruence


def test_block_reduce_rank_too_large():
    with pytest.raises(PreconditionError):
        block_reduce(make_point(np.eye(3)), 2)


def test_identity_and_permutation_frames():
    x = make_point(np.arange(4.0).reshape(2, 2))
    assert np.array_equal(apply_frame(identity_frame(2, 2, 2), x).entries, x.entries)
    perm = np.array([[0.0, 1.0], [1.0, 0.0]])
    f = BlockFrame(perm, perm, 1)
    assert np.array_equal(apply_frame(f, make_point(np.diag([0.0, 5.0]))).entries, np.diag([5.0, 0.0]))


def test_frame_rejects_non_unitary():
    with pytest.raises(InputError):
        BlockFrame(np.eye(2) * 2, np.eye(2), 1)


@given(st.integers(0, 10_000), st.booleans())
def test_frames_are_isometries(seed, cplx):
    rng = np.random.default_rng(seed)
    f = BlockFrame(random_orthogonal(rng, 3, cplx), random_orthogonal(rng, 4, cplx), 2)
    shape = (3, 4)
    x = rng.standard_normal(shape) + (1j * rng.standard_normal(shape) if cplx else 0)
    y = rng.standard_normal(shape) + (1j * rng.standard_normal(shape) if cplx else 0)
    px, py = make_point(x), make_point(y)
    d = frobenius_dist(px, py)
    assert frobenius_dist(apply_frame(f, px), apply_frame(f, py)) == pytest.approx(d, rel=1e-12)
    assert np.allclose(inverse_frame(f, apply_frame(f, px)).entries, x, atol=1e-10)


def test_congruence_frame_keeps_structure(rng):
    q = random_orthogonal(rng, 4)
    f = BlockFrame(q, q, 2, congruence=True)
    g = rng.standard_normal((4, 4))
    for st_, x in (("sym", g + g.T), ("skew", g - g.T)):
        y = apply_frame(f, make_point(x, structure=st_))
        assert y.structure == st_


def test_scale_bounds_examples():
    b = scale_bounds(np.eye(3), np.eye(2))
    assert (b.lambda_min, b.lambda_max) == (1.0, 1.0)
    b = scale_bounds(2 * np.eye(3), 3 * np.eye(2))
    assert (b.lambda_min, b.lambda_max) == pytest.approx((6.0, 6.0))
    with pytest.raises(PreconditionError):
        scale_bounds(np.diag([1.0, 0.0]), np.eye(2))


def test_scale_bounds_sandwich(rng):
    cl, cr = rng.standard_normal((3, 3)), rng.standard_normal((2, 2))
    b = scale_bounds(cl, cr)
    for _ in range(100):
        a, c = rng.standard_normal((3, 2)), rng.standard_normal((3, 2))
        d = np.linalg.norm(a - c)
        dm = np.linalg.norm(cl @ a @ cr - cl @ c @ cr)
        assert b.lambda_min * d * (1 - 1e-12) <= dm <= b.lambda_max * d * (1 + 1e-12)


def test_truncate_examples():
    p = make_point(np.outer([1.0, 2.0], [3.0, 1.0]))
    assert np.allclose(truncate_to_rank(p, 1).entries, p.entries)
    assert np.allclose(truncate_to_rank(make_point(np.diag([3.0, 1.0])), 1).entries, np.diag([3.0, 0.0]))


@pytest.mark.parametrize("structure", ["general", "sym", "skew"])
def test_truncate_is_nearest_and_idempotent(rng, structure):
    g = rng.standard_normal((4, 4))
    x = {"general": g, "sym": g + g.T, "skew": g - g.T}[structure]
    p = make_point(x, structure=structure)
    r = 2
    t = truncate_to_rank(p, r)
    assert t.structure == structure
    assert numerical_rank(t) <= r
    assert np.allclose(truncate_to_rank(t, r).entries, t.entries, atol=1e-12)
    best = frobenius_dist(p, t)
    for k in range(300):
        h = rng.standard_normal((4, 2))
        if structure == "general":
            c = h @ rng.standard_normal((2, 4))
        elif structure == "sym":
            c = h @ np.diag(rng.standard_normal(2)) @ h.T
        else:
            c = h @ np.array([[0.0, 1.0], [-1.0, 0.0]]) @ h.T
        if k % 2:
            # candidates near the optimum probe the minimality sharply
            c = truncate_to_rank(make_point(t.entries + 1e-3 * c, structure=structure), r).entries
        assert best <= np.linalg.norm(x - c) + 1e-12


def test_json_round_trip(tmp_path):
    for p in (make_point(np.arange(6.0).reshape(2, 3)),
              make_point(np.array([[1 + 2j, 0], [3j, 1]])),
              make_point(np.array([[0.0, 2.0], [-2.0, 0.0]]), structure="skew")):
        path = tmp_path / "m.json"
        dump_point(p, path)
        q = load_point(path)
        assert (q.field, q.structure) == (p.field, p.structure)
        assert np.array_equal(q.entries, p.entries)
        assert json.loads(path.read_text()) == point_to_json(p)


@pytest.mark.parametrize("bad", [
    [],
    {"field": "R"},
    {"field": "Q", "structure": "general", "rows": 1, "cols": 1, "entries": [[1]]},
    {"field": "R", "structure": "general", "rows": 2, "cols": 1, "entries": [[1]]},
    {"field": "R", "structure": "general", "rows": 1, "cols": 1, "entries": [["x"]]},
    {"field": "C", "structure": "general", "rows": 1, "cols": 1, "entries": [[1]]},
    {"field": "R", "structure": "sym", "rows": 2, "cols": 2, "entries": [[1, 2], [3, 4]]},
])
def test_json_schema_validation(bad):
    with pytest.raises(InputError):
        point_from_json(bad)
