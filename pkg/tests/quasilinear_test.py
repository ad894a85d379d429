import os
import sys
from math import log
from types import SimpleNamespace

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

import numpy as np
from mpmath import mp
from mpmath.libmp import fzero, to_float

from Utilities import random_reduced_tau, random_reduced_z
from arith.ball import ComplexBall, RealBall, ball_mul, mag_log2
from engines.Base import all_chars, parity, to_plain
from engines.QuasiLinear import (
    choose_split_params, dimension_split, dupl_products, easy_levels, ql_all, ql_at, ql_batch, ql_squares,
    ql_theta00, scaled_tau, split_cost,
)
from engines.SumNaive import sum_naive
from geometry.distance import distance_profile
from siegel.context import SiegelContext, zero_vector
from oracle import ball_matrix, balls, close, jacobi

N = 128


def fake_ctx(c):
    return SimpleNamespace(c=[RealBall.from_float(x) for x in c])


def as_mpc(x: ComplexBall):
    return mp.mpc(mp.make_mpf(x.re), mp.make_mpf(x.im))


def test_split_parameters():
    s = float(np.sqrt(np.pi))
    assert choose_split_params(fake_ctx([s]), 64) == (0, 4)
    assert choose_split_params(fake_ctx([s, s]), 64) == (0, 4)
    d, h = choose_split_params(fake_ctx([1, 1, 50, 60]), 64)
    assert d == 2
    assert h == 0
    assert choose_split_params(fake_ctx([30]), 16) == (0, 0)


def test_dupl_products_brute_force():
    rng = np.random.default_rng(8)
    for g in (1, 2, 3):
        n = 1 << g
        t = [ComplexBall.from_complex(complex(*rng.normal(size=2))) for _ in range(n)]
        u = [ComplexBall.from_complex(complex(*rng.normal(size=2))) for _ in range(n)]
        with mp.workprec(200):
            for b in range(n):
                out = dupl_products(t, u, 128, b)
                sq = dupl_products(t, t, 128, b)
                for a in range(n):
                    ref = sum((-1) ** parity(c, b) * as_mpc(t[c]) * as_mpc(u[a ^ c]) for c in range(n))
                    assert close(out[a], ref, 120)
                    ref = sum((-1) ** parity(c, b) * as_mpc(t[c]) * as_mpc(t[a ^ c]) for c in range(n))
                    assert close(sq[a], ref, 120)


def test_duplication_formula():
    """θ_{a,b}(z1)θ_{a,b}(z2) from the θ_{a',0} at (z1 + z2, 2τ) and (z1 - z2, 2τ), real z."""
    rng = np.random.default_rng(9)
    for g in (1, 2):
        tau = random_reduced_tau(g, rng)
        z1 = rng.uniform(-0.5, 0.5, size=g)
        z2 = rng.uniform(-0.5, 0.5, size=g)
        at = lambda z, t: sum_naive(SiegelContext.create(balls(z), t, N + 32), N)
        v1, v2 = at(z1, tau), at(z2, tau)
        tau2 = scaled_tau(tau, 1)
        s, d = at(z1 + z2, tau2), at(z1 - z2, tau2)
        ts = [s[(a, 0)] for a in range(1 << g)]
        td = [d[(a, 0)] for a in range(1 << g)]
        for b in range(1 << g):
            prods = dupl_products(ts, td, N, b)
            for a in range(1 << g):
                assert prods[a].overlaps(ball_mul(v1[(a, b)], v2[(a, b)], N))


def check_against_naive(ctx, values, tol_bits=16):
    ref = sum_naive(ctx, N)
    for ch in all_chars(ctx.g):
        assert values[ch].overlaps(ref[ch])
        assert mag_log2(values[ch].rad) < -(N - tol_bits)


def test_ql_at_theta_constants():
    ctx = SiegelContext.create(balls([0]), ball_matrix([[1j]]), N + 32)
    values = ql_all(ctx, N)
    assert values.meta["engine"] == "ql"
    assert values.meta.get("h", 0) >= 1
    check_against_naive(ctx, values)
    assert values[(1, 1)].contains_zero()


def test_ql_dimension_one():
    tau, z = 0.3 + 1.2j, 0.1 + 0.2j
    ctx = SiegelContext.create(balls([z]), ball_matrix([[tau]]), N + 32)
    values = to_plain(ql_all(ctx, N + 8), ctx, N + 8)
    with mp.workprec(N + 64):
        for a, b in all_chars(1):
            assert close(values[(a, b)], jacobi(a, b, z, tau), N - 16)


def test_ql_dimension_two():
    rng = np.random.default_rng(10)
    tau = random_reduced_tau(2, rng)
    z = random_reduced_z(tau, rng)
    ctx = SiegelContext.create(z, tau, N + 32)
    check_against_naive(ctx, ql_all(ctx, N))
    ctx0 = ctx.with_z(zero_vector(2))
    check_against_naive(ctx0, ql_all(ctx0, N))


def test_ql_at_unreduced_z():
    tau = ball_matrix([[0.2 + 1.1j]])
    z = balls([0.3 + 2.5j])
    ctx = SiegelContext.create(z, tau, N + 32)
    check_against_naive(ctx, ql_at(ctx, N, shifted=False))


def test_ql_batch():
    tau = ball_matrix([[0.1 + 1.3j, 0.2 + 0.1j], [0.2 + 0.1j, -0.1 + 1.5j]])
    zs = [balls([0.1, 0.2]), balls([0.3 + 0.1j, -0.2 + 0.2j])]
    ctx = SiegelContext.create(zs[0], tau, N + 32)
    for z, values in zip(zs, ql_batch(ctx, zs, N)):
        check_against_naive(ctx.with_z(z), values)


def test_dimension_split():
    tau = ball_matrix([[0.1 + 1.0j, 0.2], [0.2, 0.3 + 120.0j]])
    ctx = SiegelContext.create(balls([0.1 + 0.05j, 0.2 + 1.0j]), tau, N + 32)
    d, _ = choose_split_params(ctx, N)
    assert d == 1
    check_against_naive(ctx, dimension_split(ctx, 1, N))
    check_against_naive(ctx, ql_all(ctx, N))


def test_squares_and_theta00():
    tau = ball_matrix([[0.25 + 1.05j]])
    z = balls([0.15 + 0.1j])
    ctx = SiegelContext.create(z, tau, N + 32)
    ref = sum_naive(ctx, N)
    sq = ql_squares(ctx, N)
    for ch in all_chars(1):
        assert sq[ch].overlaps(ball_mul(ref[ch], ref[ch], N))
    assert ql_theta00(ctx, N).overlaps(ref[(0, 0)])


def check_shifted_radii(ctx, values, n_bits, slack=8):
    """Every radius within 2^(slack - n_bits)·exp(-Dist(v, Z^g + a/2)²)."""
    profile = distance_profile(ctx)
    for (a, b), x in values.values.items():
        if x.rad == fzero:
            continue
        assert mag_log2(x.rad) <= -n_bits + slack - to_float(profile.v[a].lower()) / log(2), (a, b)


def test_ql_large_precision_against_naive():
    rng = np.random.default_rng(123)
    for n_bits in (1024, 4096):
        for g in (1, 2):
            tau = random_reduced_tau(g, rng)
            z = random_reduced_z(tau, rng)
            ctx = SiegelContext.create(z, tau, n_bits + 32)
            values = ql_all(ctx, n_bits, shifted=True)
            assert values.meta.get("h", 0) >= 1
            assert values.meta.get("fallback") is None
            ref = sum_naive(ctx, n_bits, shifted=True)
            for ch in all_chars(g):
                assert values[ch].overlaps(ref[ch])
            check_shifted_radii(ctx, values, n_bits)


def test_early_switch():
    rng = np.random.default_rng(16)
    contexts = [SiegelContext.create(balls([0]), ball_matrix([[1j]]), N + 32)]
    for g in (1, 2):
        tau = random_reduced_tau(g, rng)
        contexts.append(SiegelContext.create(random_reduced_z(tau, rng), tau, N + 32))
    for ctx in contexts:
        fast = ql_all(ctx, N, early_switch=True)
        slow = ql_all(ctx, N, early_switch=False)
        check_against_naive(ctx, fast)
        check_against_naive(ctx, slow)
        if "fallback" not in fast.meta:
            assert 0 <= fast.meta["easy"] <= fast.meta["h"]
            assert (fast.meta["t"] is None) == (fast.meta["easy"] == fast.meta["h"])
        if "fallback" not in slow.meta:
            assert slow.meta["easy"] == 0
            assert slow.meta["t"] is not None


def test_easy_levels_at_theta_constants():
    ctx = SiegelContext.create(balls([0]), ball_matrix([[1j]]), N + 32)
    _, h = choose_split_params(ctx, N)
    easy = easy_levels(ctx, h, distance_profile(ctx))
    assert 0 <= easy.k <= h
    if easy.k:
        # odd characteristics vanish at z = 0
        assert (1, 1) not in easy.base
        assert set(easy.losses) == set(range(easy.k))
        assert all(set(easy.hints[j]) == {"0", "z"} for j in range(1, easy.k))


def test_auto_split():
    c = [1, 1, 50, 60]
    d, h = choose_split_params(fake_ctx(c), 64, auto=True)
    assert d >= 2
    assert h == 0
    assert split_cost(c, 64, d) < split_cost(c, 64, 0)
    assert split_cost(c, 64, d) == min(split_cost(c, 64, k) for k in range(len(c)))
    tau = ball_matrix([[0.1 + 1.0j, 0.2], [0.2, 0.3 + 120.0j]])
    ctx = SiegelContext.create(balls([0.1 + 0.05j, 0.2 + 1.0j]), tau, N + 32)
    check_against_naive(ctx, ql_all(ctx, N, auto_split=True))


if __name__ == '__main__':
    test_split_parameters()
    test_dupl_products_brute_force()
    test_duplication_formula()
    test_ql_at_theta_constants()
    test_ql_dimension_one()
    test_ql_dimension_two()
    test_ql_at_unreduced_z()
    test_ql_batch()
    test_dimension_split()
    test_squares_and_theta00()
    test_ql_large_precision_against_naive()
    test_early_switch()
    test_easy_levels_at_theta_constants()
    test_auto_split()
    print("ok")
