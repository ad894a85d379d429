import os
import sys

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

import numpy as np
from mpmath import mp, mpf

from arith.ball import RealBall
from arith.numba import babai, ellipsoid_count, nearest_point, points_within
from arith.vectorized import vectorized_count, vectorized_dist_sq, vectorized_norms, box_points, vectorized_tail
from engines.Base import char_bits
from geometry.bounds import choose_radius, old_bound_applies, tail_bound_new, tail_bound_old, tail_bound_shifted
from geometry.distance import dist_sq, distances, min_norm_sq
from geometry.ellipsoid import build_ellipsoid, count_bound
from main import tail_rows

rng = np.random.default_rng(7)


def upper_factor(Y: np.ndarray) -> np.ndarray:
    """C upper triangular with CᵀC = πY."""
    return np.linalg.cholesky(np.pi * Y).T


def random_Y(g: int) -> np.ndarray:
    A = rng.uniform(-0.4, 0.4, size=(g, g))
    return np.eye(g) + (A + A.T) / 4


def as_balls(C: np.ndarray, v: np.ndarray):
    return [[RealBall.from_float(float(x)) for x in row] for row in C], [RealBall.from_float(float(x)) for x in v]


def test_tail_table_values():
    rows = {r: (old, new) for r, old, new in tail_rows(2, 0, [2, 3, 4])}
    assert rows[4] == ("1.9e-05", "1.4e-05")
    assert rows[2][1] == "1.2e+00"
    assert float(rows[3][1]) < float(rows[2][1])


def test_old_bound_domain():
    assert not old_bound_applies(6, 1, 2, 4)
    assert old_bound_applies(2, 1, 4, 0)
    rows = tail_rows(6, 4, [2])
    assert rows[0][1] == "--"


def test_new_bound_dominates_tail():
    C = np.eye(2)
    v = np.array([0.3, -0.2])
    for R in (2.0, 3.0, 4.0):
        for p in (0, 2):
            tail = vectorized_tail(C, v, R, p, half_width=12)
            assert tail <= float(tail_bound_new(2, [1, 1], R, p).mid)
    assert float(tail_bound_old(2, 1, 4).mid) > float(tail_bound_new(2, [1, 1], 4).mid)


def test_choose_radius():
    for p in (0, 1, 4, 8):
        for e in (10, 100, 1000):
            R = choose_radius(p, mpf(2) ** -e)
            assert R >= 2
            with mp.workprec(64):
                assert mpf(R) ** p * mp.exp(-mpf(R) ** 2) <= mpf(2) ** -e


def test_babai_against_box():
    for g in (1, 2, 3):
        C = upper_factor(random_Y(g))
        for _ in range(5):
            v = rng.uniform(-3, 3, size=g)
            n, r2 = babai(C, v)
            assert np.isclose(r2, vectorized_norms(C, v, np.array([n]))[0])
            m, best = nearest_point(C, v, 1 << 12)
            assert np.isclose(best, vectorized_dist_sq(C, v))


def test_counts_agree():
    for g in (1, 2, 3):
        C = upper_factor(random_Y(g))
        v = rng.uniform(-0.5, 0.5, size=g)
        for r2 in (1.5, 7.3, 20.1):
            expected = vectorized_count(C, v, r2, half_width=8)
            assert ellipsoid_count(C, v, r2) == expected
            pts, norms, count = points_within(C, v, r2, 1 << 14)
            assert count == expected
            assert np.allclose(np.sort(norms[:count]), np.sort(vectorized_norms(C, v, pts[:count])))


def test_ellipsoid_tree():
    g = 3
    C = upper_factor(random_Y(g))
    v = rng.uniform(-0.5, 0.5, size=g)
    r2 = 9.7
    tree = build_ellipsoid(C, v, r2)
    box = box_points(v, 8)
    inside = box[vectorized_norms(C, v, box) <= r2]
    pts = set(tree.points())
    assert len(pts) == tree.count
    for n in inside:
        assert tuple(int(x) for x in n) in pts
        assert tuple(int(x) for x in n) in tree
    assert tree.count <= count_bound(np.diag(C), np.sqrt(r2 * 1.01))
    assert sum(tree.layer_lengths()) == tree.count


def test_dist_sq_ball():
    for g in (1, 2, 3):
        C = upper_factor(random_Y(g))
        v = rng.uniform(-2, 2, size=g)
        Cb, vb = as_balls(C, v)
        d = dist_sq(Cb, vb)
        with mp.workprec(64):
            assert abs(mp.make_mpf(d.mid) - vectorized_dist_sq(C, v)) <= mp.make_mpf(d.rad) + 1e-9


def test_min_norm_sq():
    C = upper_factor(np.array([[1.0, 0.5], [0.5, 1.0]]))
    Cb, _ = as_balls(C, np.zeros(2))
    pts = box_points(np.zeros(2), 4)
    norms = vectorized_norms(C, np.zeros(2), pts)
    expected = norms[norms > 0].min()
    assert np.isclose(float(min_norm_sq(Cb)), expected)


def test_shifted_tail_bound_random():
    local = np.random.default_rng(19)
    for _ in range(40):
        g = int(local.integers(1, 4))
        C = upper_factor(random_Y(g))
        a = int(local.integers(0, 1 << g))
        center = local.uniform(-0.5, 0.5, size=g) - np.array([x / 2 for x in char_bits(a, g)])
        d2 = vectorized_dist_sq(C, center)
        R = float(local.uniform(2, 6))
        if R * R <= d2:
            continue
        delta = np.sqrt(R * R - d2)
        tail = vectorized_tail(C, center, R, 0, half_width=8)
        assert tail <= float(tail_bound_shifted(g, delta, R).mid)


def test_dist_sq_against_box_search():
    local = np.random.default_rng(20)
    for i in range(200):
        g = 1 + i % 4
        C = upper_factor(random_Y(g))
        v = local.uniform(-2, 2, size=g)
        Cb, vb = as_balls(C, v)
        ref = vectorized_dist_sq(C, v, half_width=3)
        d = dist_sq(Cb, vb)
        with mp.workprec(64):
            assert abs(mp.make_mpf(d.mid) - ref) <= mp.make_mpf(d.rad) + 1e-9
        a = int(local.integers(0, 1 << g))
        shifted = distances(Cb, vb)[a]
        ref = vectorized_dist_sq(C, v - np.array([x / 2 for x in char_bits(a, g)]), half_width=3)
        with mp.workprec(64):
            assert abs(mp.make_mpf(shifted.mid) - ref) <= mp.make_mpf(shifted.rad) + 1e-9


if __name__ == '__main__':
    test_tail_table_values()
    test_old_bound_domain()
    test_new_bound_dominates_tail()
    test_choose_radius()
    test_babai_against_box()
    test_counts_agree()
    test_ellipsoid_tree()
    test_dist_sq_ball()
    test_min_norm_sq()
    test_shifted_tail_bound_random()
    test_dist_sq_against_box_search()
    print("ok")
