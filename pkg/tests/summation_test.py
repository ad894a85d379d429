import itertools
import os
import sys

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

import numpy as np
from mpmath import mp

from Utilities import get_engine, random_reduced_tau, random_reduced_z
from arith.ball import ComplexBall, ball_add, ball_mul, ball_mul_int, ball_sum, from_mpc, to_mpc as as_mpc
from arith.vectorized import vectorized_theta
from engines.Base import all_chars, char_bits, is_odd, to_plain
from engines.SumNaive import sum_naive, theta_values_plain
from engines.Summation import MulCounter, sum_jets, sum_optimized
from geometry.bounds import radius_for_sum
from geometry.distance import dist_sq
from siegel.context import SiegelContext, tilde_phase
from oracle import ball_matrix, balls, brute_theta, close, jacobi

N = 128


def theta00_at_i():
    return mp.pi ** mp.mpf(0.25) / mp.gamma(mp.mpf(0.75))


def test_theta00_at_i():
    ctx = SiegelContext.create(balls([0]), ball_matrix([[1j]]), N + 32)
    with mp.workprec(N + 64):
        ref = theta00_at_i()
        assert abs(ref - mp.mpf("1.0864348112133080146")) < 1e-18
        for f in (sum_naive, sum_optimized):
            assert close(f(ctx, N)[(0, 0)], ref, N)


def test_product_in_dimension_two():
    ctx = SiegelContext.create(balls([0, 0]), ball_matrix([[1j, 0], [0, 1j]]), N + 32)
    values = sum_optimized(ctx, N)
    with mp.workprec(N + 64):
        ref = theta00_at_i() ** 2
        assert abs(ref - mp.mpf("1.1803405990160962")) < 1e-15
        assert close(values[(0, 0)], ref, N)


def test_dimension_one_against_jacobi():
    tau, z = 0.3 + 1.2j, 0.1 + 0.2j
    ctx = SiegelContext.create(balls([z]), ball_matrix([[tau]]), N + 32)
    for f in (sum_naive, sum_optimized):
        values = to_plain(f(ctx, N + 8), ctx, N + 8)
        with mp.workprec(N + 64):
            for a, b in all_chars(1):
                assert close(values[(a, b)], jacobi(a, b, z, tau), N)


def test_jacobi_identity():
    ctx = SiegelContext.create(balls([0]), ball_matrix([[-0.4 + 1.3j]]), N + 32)
    v = sum_optimized(ctx, N)
    with mp.workprec(N + 64):
        t = {ch: mp.mpc(mp.make_mpf(v[ch].re), mp.make_mpf(v[ch].im)) for ch in v.chars()}
        assert abs(t[(0, 0)] ** 4 - t[(0, 1)] ** 4 - t[(1, 0)] ** 4) < mp.mpf(2) ** -(N - 16)


def test_odd_characteristics_vanish_at_zero():
    rng = np.random.default_rng(4)
    for g in (1, 2):
        tau = random_reduced_tau(g, rng)
        ctx = SiegelContext.create([balls([0])[0]] * g, tau, N + 32)
        values = sum_optimized(ctx, N)
        for ch in values.chars():
            if is_odd(ch):
                assert values[ch].contains_zero()
            else:
                assert not values[ch].contains_zero()


def test_sum_matches_naive_and_brute_force():
    rng = np.random.default_rng(5)
    g = 2
    tau = random_reduced_tau(g, rng)
    z = random_reduced_z(tau, rng)
    ctx = SiegelContext.create(z, tau, N + 32)
    fast = sum_optimized(ctx, N)
    slow = sum_naive(ctx, N)
    plain = to_plain(fast, ctx, N + 8)
    with mp.workprec(N + 64):
        zc = [complex(x) for x in z]
        tc = [[complex(x) for x in row] for row in tau]
        for a, b in all_chars(g):
            assert fast[(a, b)].overlaps(slow[(a, b)])
            ref = brute_theta(char_bits(a, g), char_bits(b, g), zc, tc)
            assert close(plain[(a, b)], ref, N - 8)
    assert fast.meta["points"] > 0
    assert fast.meta["mults_per_point"] > 0


def test_double_precision_kernel_agrees():
    tau = np.array([[0.1 + 1.1j, 0.2 + 0.3j], [0.2 + 0.3j, -0.2 + 1.3j]])
    z = np.array([0.25 + 0.1j, -0.1 - 0.2j])
    values = theta_values_plain(balls(z), ball_matrix(tau), 64)
    for a, b in all_chars(2):
        x = vectorized_theta(z, tau, np.array(char_bits(a, 2)), np.array(char_bits(b, 2)))
        assert np.allclose(complex(values[(a, b)]), x, atol=1e-12)


def test_engines_agree_through_process():
    tau = ball_matrix([[0.45 + 0.3j]])
    z = balls([0.2 - 0.1j])
    ref = {}
    for name in ("sum-naive", "sum", "ql"):
        values = get_engine(name).process(z, tau, N)
        assert values.meta["engine"] == name
        plain = to_plain(values, SiegelContext.create(z, tau, N + 32), N + 32)
        with mp.workprec(N + 64):
            for a, b in all_chars(1):
                assert close(plain[(a, b)], jacobi(a, b, 0.2 - 0.1j, 0.45 + 0.3j), N - 16)
        ref[name] = values
    for ch in ref["sum"].chars():
        assert ref["sum"][ch].overlaps(ref["ql"][ch])


def test_sum_jets_first_derivative():
    tau, z = 1.1j, 0.3 + 0.1j
    ctx = SiegelContext.create(balls([z]), ball_matrix([[tau]]), N + 32)
    jet = sum_jets(ctx, 96, 2)
    with mp.workprec(N + 64):
        q = mp.expjpi(mp.mpc(tau))
        x = mp.pi * mp.mpc(z)
        d1 = mp.pi * mp.jtheta(3, x, q, 1)
        d2 = mp.pi ** 2 * mp.jtheta(3, x, q, 2)
        assert close(jet.values[(0, 0)][(1,)], d1, 80)
        assert close(jet.values[(0, 0)][(2,)], d2, 80)
        assert close(jet.values[(0, 0)][(0,)], mp.jtheta(3, x, q), 80)


def test_sum_jets_odd_a():
    # centres v - 1/2: the radius computed at v covers them
    tau, z = 0.2 + 1.05j, 0.1 + 0.45j
    ctx = SiegelContext.create(balls([z]), ball_matrix([[tau]]), N + 32)
    jet = sum_jets(ctx, 96, 2, chars=[(1, 0), (1, 1)])
    with mp.workprec(N + 64):
        q = mp.expjpi(mp.mpc(tau))
        x = mp.pi * mp.mpc(z)
        for k in range(3):
            assert close(jet.values[(1, 0)][(k,)], mp.pi ** k * mp.jtheta(2, x, q, k), 80)
            assert close(jet.values[(1, 1)][(k,)], -mp.pi ** k * mp.jtheta(1, x, q, k), 80)


def brute_gradient(a_bits, b_bits, z, tau, K: int = 10):
    """(∂θ_{a,b}/∂z_j)_j over the box |n_j| <= K."""
    g = len(z)
    w = [mp.mpc(z[j]) + mp.mpf(b_bits[j]) / 2 for j in range(g)]
    out = [mp.mpc(0)] * g
    for n in itertools.product(range(-K, K + 1), repeat=g):
        m = [n[j] + mp.mpf(a_bits[j]) / 2 for j in range(g)]
        q = sum(m[i] * mp.mpc(tau[i][j]) * m[j] for i in range(g) for j in range(g))
        t = mp.expjpi(q + 2 * sum(m[j] * w[j] for j in range(g)))
        out = [out[j] + 2j * mp.pi * m[j] * t for j in range(g)]
    return out


def test_sum_jets_gradient_dimension_two():
    rng = np.random.default_rng(13)
    g = 2
    tau = random_reduced_tau(g, rng)
    z = random_reduced_z(tau, rng)
    ctx = SiegelContext.create(z, tau, N + 32)
    jet = sum_jets(ctx, 64, 1)
    with mp.workprec(N):
        zc = [complex(x) for x in z]
        tc = [[complex(x) for x in row] for row in tau]
        for a in range(1 << g):
            for b in (0, 3):
                ref = brute_gradient(char_bits(a, g), char_bits(b, g), zc, tc)
                assert close(jet.values[(a, b)][(1, 0)], ref[0], 48)
                assert close(jet.values[(a, b)][(0, 1)], ref[1], 48)


def test_best_radius_is_the_default():
    rng = np.random.default_rng(14)
    for g in (1, 2, 3):
        tau = random_reduced_tau(g, rng)
        ctx = SiegelContext.create(random_reduced_z(tau, rng), tau, N + 32)
        dist = dist_sq(ctx.C, ctx.v)
        for shifted in (False, True):
            best = radius_for_sum(ctx, N, dist=dist, shifted=shifted)
            assert best <= radius_for_sum(ctx, N, "A", dist, shifted)
            assert best <= radius_for_sum(ctx, N, "B", dist, shifted)
        fast, slow = sum_optimized(ctx, N, shifted=True), sum_optimized(ctx, N, variant="A", shifted=True)
        assert fast.meta["points"] <= slow.meta["points"]
        for ch in fast.chars():
            assert fast[ch].overlaps(slow[ch])
            assert fast[ch].overlaps(sum_naive(ctx, N, [ch])[ch])


def test_mul_counter():
    x = ComplexBall.from_complex(1.5 + 0.5j)
    y = ComplexBall.from_complex(-0.25 + 2j)
    counter = MulCounter(100)
    assert counter.mul(x, y, 50) == ball_mul(x, y, 50)
    counter.dot([x, y], [y, x], 100)
    assert counter.count == 3
    assert counter.weighted == 2.5
    rng = np.random.default_rng(15)
    for g in (1, 2):
        tau = random_reduced_tau(g, rng)
        values = sum_optimized(SiegelContext.create(random_reduced_z(tau, rng), tau, 288), 256)
        assert values.meta["mults"] > 0
        assert values.meta["mults_per_point"] < 8


def test_quasi_periodicity():
    """θ_{a,b}(z + e + τw) = (-1)^{a·e + b·w} e(-wᵀτw - 2wᵀz) θ_{a,b}(z), and the θ̃ phase for even w."""
    rng = np.random.default_rng(18)
    for g in (1, 2):
        tau = random_reduced_tau(g, rng)
        z = random_reduced_z(tau, rng)
        e = [int(x) for x in rng.integers(-2, 3, size=g)]
        w = [int(x) for x in rng.integers(-1, 2, size=g)]
        p = N + 64
        tw = [ball_sum([ball_mul_int(tau[i][j], w[j], p) for j in range(g)], p) for i in range(g)]
        z2 = [ball_add(ball_add(z[i], tw[i], p), ComplexBall.from_int(e[i]), p) for i in range(g)]
        base = theta_values_plain(z, tau, N)
        moved = theta_values_plain(z2, tau, N)
        with mp.workprec(p):
            q = sum(w[i] * as_mpc(tau[i][j]) * w[j] for i in range(g) for j in range(g))
            q += 2 * sum(w[i] * as_mpc(z[i]) for i in range(g))
            factor = from_mpc(mp.expjpi(-q), p)
        for a, b in all_chars(g):
            k = sum(x * y for x, y in zip(char_bits(a, g), e)) + sum(x * y for x, y in zip(char_bits(b, g), w))
            sign = 1 - 2 * (k % 2)
            assert moved[(a, b)].overlaps(ball_mul_int(ball_mul(factor, base[(a, b)], p), sign, p))
        ctx = SiegelContext.create(z, tau, N + 32)
        w2 = [2 * x for x in w]
        z3 = [ball_add(z[i], ball_add(tw[i], tw[i], p), p) for i in range(g)]
        phase = tilde_phase(ctx, w2)
        near, far = sum_naive(ctx, N), sum_naive(ctx.with_z(z3), N)
        for ch in all_chars(g):
            assert near[ch].overlaps(ball_mul(phase, far[ch], p))


if __name__ == '__main__':
    test_theta00_at_i()
    test_product_in_dimension_two()
    test_dimension_one_against_jacobi()
    test_jacobi_identity()
    test_odd_characteristics_vanish_at_zero()
    test_sum_matches_naive_and_brute_force()
    test_double_precision_kernel_agrees()
    test_engines_agree_through_process()
    test_sum_jets_first_derivative()
    test_sum_jets_odd_a()
    test_sum_jets_gradient_dimension_two()
    test_best_radius_is_the_default()
    test_mul_counter()
    test_quasi_periodicity()
    print("ok")
