import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_orthogonal
from lnemat.arrangements import (
    AffineSubspace,
    Arrangement,
    arrangement_constant,
    arrangement_path,
    dump_arrangement,
    intersect,
    load_arrangement,
    optimal_junction,
    sampled_cos_sup,
    sharpness_points,
    subspace_angle,
    triangular_coordinates,
    triangular_det0,
    triangular_matrix,
)
from lnemat.errors import InputError

ROOT2 = math.sqrt(2.0)


def hyperplane(normal, offset=None):
    normal = np.asarray(normal, float)
    n = normal.size
    base = np.zeros(n) if offset is None else np.asarray(offset, float)
    basis = np.linalg.svd(normal[None])[2][1:].T
    return AffineSubspace(base, basis)


def line(base, direction):
    return AffineSubspace.spanned(base, np.asarray(direction, float))


def random_pair(rng, ambient=6):
    k = int(rng.integers(0, 3))
    q1, q2 = int(rng.integers(1, 3)), int(rng.integers(1, 3))
    basis = random_orthogonal(rng, ambient)[:, : k + q1 + q2]
    p = rng.standard_normal(ambient)
    w, v1 = basis[:, :k], basis[:, k:k + q1]
    v2 = basis[:, k + q1:] + v1 @ rng.standard_normal((q1, q2))
    return AffineSubspace.spanned(p, np.hstack([w, v1])), AffineSubspace.spanned(p, np.hstack([w, v2])), p


def test_validation():
    with pytest.raises(InputError):
        AffineSubspace(np.zeros(2), np.array([[1.0], [1.0]]))
    with pytest.raises(InputError):
        AffineSubspace(np.zeros(2), np.zeros((2, 0)))
    a = line([0, 0], [1, 0])
    with pytest.raises(InputError):
        Arrangement((a, line([5, 0], [2, 0])))
    with pytest.raises(InputError):
        Arrangement(())


def test_intersection_of_coordinate_hyperplanes():
    inter = intersect(hyperplane([1, 0, 0]), hyperplane([0, 1, 0]))
    assert isinstance(inter, AffineSubspace) and inter.dim == 1
    assert abs(abs(inter.directions[2, 0]) - 1.0) < 1e-12
    assert np.allclose(inter.base[:2], 0.0)


def test_parallel_lines_do_not_meet():
    assert intersect(line([0, 0], [1, 0]), line([0, 1], [1, 0])) is None


def test_random_pair_contains_common_point(rng):
    for _ in range(20):
        l1, l2, p = random_pair(rng)
        inter = intersect(l1, l2)
        assert inter is not None
        if isinstance(inter, AffineSubspace):
            assert inter.distance(p) < 1e-9
        else:
            assert np.linalg.norm(inter - p) < 1e-9


def test_angle_examples():
    assert subspace_angle(hyperplane([1, 0, 0]), hyperplane([0, 1, 0])).alpha == pytest.approx(math.pi / 2)
    assert subspace_angle(line([0, 0], [1, 0]), line([0, 0], [1, 1])).alpha == pytest.approx(math.pi / 4)


def test_angle_containment_and_empty():
    plane = hyperplane([0, 0, 1])
    res = subspace_angle(plane, line([0, 0, 0], [1, 0, 0]))
    assert res.contained and res.alpha == 0.0
    with pytest.raises(InputError):
        subspace_angle(line([0, 0], [1, 0]), line([0, 1], [1, 0]))


def test_small_angles_are_accurate():
    for eps in (1e-3, 1e-6, 1e-9):
        res = subspace_angle(line([0, 0], [1, 0]), line([0, 0], [math.cos(eps), math.sin(eps)]))
        assert res.alpha == pytest.approx(eps, rel=1e-6)


@given(st.integers(0, 10_000))
def test_angle_symmetric_and_isometry_invariant(seed):
    rng = np.random.default_rng(seed)
    l1, l2, _ = random_pair(rng)
    a12, a21 = subspace_angle(l1, l2).alpha, subspace_angle(l2, l1).alpha
    assert abs(a12 - a21) < 1e-12
    q, t = random_orthogonal(rng, 6), rng.standard_normal(6)
    m1 = AffineSubspace(q @ l1.base + t, q @ l1.directions)
    m2 = AffineSubspace(q @ l2.base + t, q @ l2.directions)
    assert abs(subspace_angle(m1, m2).alpha - a12) < 1e-9
    assert a12 > 1e-6


def test_angle_matches_sampled_cosines(rng):
    for _ in range(10):
        l1, l2, _ = random_pair(rng)
        res = subspace_angle(l1, l2)
        sampled = sampled_cos_sup(l1, l2, 100_000, rng)
        assert -1e-9 <= res.cos_alpha - sampled <= 1e-3


def test_constant_examples():
    assert arrangement_constant(Arrangement((hyperplane([1, 0, 0]), hyperplane([0, 1, 0])))) == pytest.approx(ROOT2, abs=1e-12)
    assert arrangement_constant(Arrangement((hyperplane([1, 0, 0]),))) == 1.0
    two_lines = Arrangement((line([0, 0], [1, 0]), line([0, 0], [math.cos(math.pi / 3), math.sin(math.pi / 3)])))
    assert arrangement_constant(two_lines) == pytest.approx(2.0, rel=1e-12)


def test_constant_names_offending_pair():
    arr = Arrangement((line([0, 0], [1, 0]), line([0, 1], [1, 0]), line([0, 0], [0, 1])))
    with pytest.raises(InputError, match="0 and 1"):
        arrangement_constant(arr)


def test_path_same_subspace_is_straight():
    arr = Arrangement((line([0, 0], [1, 0]), line([0, 0], [0, 1])))
    p = arrangement_path(np.array([1.0, 0]), np.array([3.0, 0]), arr)
    assert len(p.segments) == 1 and p.total_length == pytest.approx(2.0)


def test_path_through_origin_on_axes():
    arr = Arrangement((line([0, 0], [1, 0]), line([0, 0], [0, 1])))
    p = arrangement_path(np.array([1.0, 0]), np.array([0.0, 1]), arr)
    assert p.total_length == pytest.approx(2.0)
    assert p.total_length / ROOT2 == pytest.approx(ROOT2)


def test_path_rejects_points_off_arrangement():
    arr = Arrangement((line([0, 0], [1, 0]), line([0, 0], [0, 1])))
    with pytest.raises(InputError):
        arrangement_path(np.array([1.0, 1.0]), np.array([0.0, 1]), arr)


def test_optimal_junction_beats_grid(rng):
    l1, l2 = hyperplane([1, 0, 0]), hyperplane([0, 1, 0])
    inter = intersect(l1, l2)
    for _ in range(20):
        x = l1.project(rng.standard_normal(3))
        y = l2.project(rng.standard_normal(3))
        w = optimal_junction(x, y, inter)
        best = np.linalg.norm(x - w) + np.linalg.norm(w - y)
        for z in np.linspace(-5, 5, 2001):
            c = np.array([0.0, 0.0, z])
            assert best <= np.linalg.norm(x - c) + np.linalg.norm(c - y) + 1e-12


def _random_arrangement(rng, ambient=5):
    p = rng.standard_normal(ambient)
    subs = []
    while len(subs) < 3:
        k = int(rng.integers(1, ambient))
        cand = AffineSubspace.spanned(p, rng.standard_normal((ambient, k)))
        if all(not s.contains(cand) and not cand.contains(s) for s in subs):
            subs.append(cand)
    return Arrangement(tuple(subs))


def test_bound_on_random_arrangements():
    rng = np.random.default_rng(0)
    for _ in range(100):
        arr = _random_arrangement(rng)
        const = arrangement_constant(arr)
        assert const >= 1.0
        for _ in range(10):
            i, j = rng.choice(3, size=2, replace=False)
            li, lj = arr.subspaces[i], arr.subspaces[j]
            x = li.base + li.directions @ (rng.standard_normal(li.dim) * 10 ** rng.uniform(-1, 2))
            y = lj.base + lj.directions @ (rng.standard_normal(lj.dim) * 10 ** rng.uniform(-1, 2))
            p = arrangement_path(x, y, arr, i, j)
            assert p.total_length <= const * np.linalg.norm(x - y) * (1 + 1e-9)


@pytest.mark.parametrize("m", [2, 3, 4])
def test_triangular_arrangement(m):
    arr = triangular_det0(m)
    assert len(arr) == m
    assert all(s.dim == m * (m + 1) // 2 - 1 for s in arr.subspaces)
    assert arrangement_constant(arr) == pytest.approx(ROOT2, abs=1e-12)
    for i in range(m):
        for j in range(i + 1, m):
            assert subspace_angle(arr.subspaces[i], arr.subspaces[j]).alpha == pytest.approx(math.pi / 2)


def test_triangular_membership_iff_singular(rng):
    arr = triangular_det0(3)
    coords = triangular_coordinates(3)
    for _ in range(100):
        v = rng.standard_normal(len(coords))
        if rng.random() < 0.5:
            v[coords.index((int(rng.integers(3)),) * 2)] = 0.0
        singular = abs(np.linalg.det(triangular_matrix(v, 3))) < 1e-12
        assert singular == bool(arr.locate(v))


def test_sharpness_approaches_constant():
    arr = triangular_det0(3)
    rng = np.random.default_rng(1)
    ratios = []
    for radius in (1.0, 10.0, 100.0, 1000.0):
        x, y, pair = sharpness_points(arr, radius, rng)
        p = arrangement_path(x, y, arr, *pair)
        ratios.append(p.total_length / np.linalg.norm(x - y))
    assert all(r <= ROOT2 * (1 + 1e-9) for r in ratios)
    assert ratios[-1] >= 0.99 * ROOT2


def test_arrangement_file_round_trip(tmp_path):
    arr = triangular_det0(2)
    path = tmp_path / "arr.json"
    dump_arrangement(arr, path)
    back = load_arrangement(path)
    assert arrangement_constant(back) == pytest.approx(ROOT2)
    path.write_text('{"not": "a list"}')
    with pytest.raises(InputError):
        load_arrangement(path)
