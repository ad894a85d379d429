from math import log, log2

from mpmath.libmp import fone, from_float, mpf_shift, to_float

import config
from arith.ball import (
    ComplexBall, add_error, ball_add, ball_dot, ball_exp, ball_mul, ball_mul_2exp, ball_mul_i,
    Precision, ball_sum, bits, exp_pi_i, exp_up, real_neg,
)
from arith.matrix import BallMatrix, BallVector
from engines.Base import ThetaEngine, ThetaValues, all_chars, char_bits, char_index, hadamard, to_plain
from geometry.bounds import radius_for_sum
from geometry.distance import dist_sq
from geometry.ellipsoid import EllipsoidTree, build_ellipsoid

logger = config.get_logger("sum")


def sum_a_shift(ctx, a: int, prec=None):
    """Context at z + τa/2 and the cofactor e(¼aᵀXa + aᵀx), X = Re τ, x = Re z.

    θ̃_{a,b}(z,τ) = cofactor · i^{aᵀb} · θ̃_{0,b}(z + τa/2, τ); the cofactor has modulus 1.
    """
    g = ctx.g
    p = bits(prec) if prec is not None else ctx.prec
    if a == 0:
        return ctx, ComplexBall.from_int(1)
    abits = char_bits(a, g)
    idx = [j for j in range(g) if abits[j]]
    shift = [ball_mul_2exp(ball_sum((ctx.tau[i][j] for j in idx), p), -1) for i in range(g)]
    z2 = [ball_add(ctx.z[i], shift[i], p) for i in range(g)]
    re = lambda x: ComplexBall.from_real(x.real)
    q = ball_sum([ball_mul_2exp(re(ctx.tau[i][j]), -2) for i in idx for j in idx] + [re(ctx.z[i]) for i in idx], p)
    return ctx.with_z(z2), exp_pi_i(q, p)


def char_phase(a: int, b: int) -> int:
    """e(aᵀb/2) = i^k; returns k."""
    return bin(a & b).count("1")


def v_radius(ctx) -> list[float]:
    return [to_float(x.rad) * 2 for x in ctx.v]


def point_arg(tau, z, n, prec) -> ComplexBall:
    """nᵀτn + 2nᵀz for an integer or half-integer vector n."""
    g = len(z)
    nb = [ComplexBall(from_float(float(x))) for x in n]
    tn = [ball_dot(tau[i], nb, prec) for i in range(g)]
    lin = [ball_add(tn[i], ball_mul_2exp(z[i], 1), prec) for i in range(g)]
    return ball_dot(nb, lin, prec)


def arg_bits(ctx, tree: EllipsoidTree) -> int:
    """Bits of the largest point argument, to size its working precision."""
    m = max(tree.box, default=0) + 1
    tmax = max(abs(complex(x)) for row in ctx.tau for x in row) + 1
    zmax = max((abs(complex(x)) for x in ctx.z), default=0.0) + 1
    g = ctx.g
    return int(log2(g * g * m * m * tmax + 2 * g * m * zmax)) + 2


def tail_pad(N: int, dist=None):
    """2^-N, or 2^-N·exp(-dist) when the target is shifted."""
    pad = mpf_shift(fone, -N)
    if dist is not None:
        pad = exp_up(real_neg(dist).upper())
        pad = mpf_shift(pad, -N)
    return pad


def working_ctx(ctx, prec: int):
    """ctx itself, or ctx recomputed so that v and u carry prec bits beyond the size of u."""
    need = prec + max(0, int(log2(1 + abs(float(ctx.u)))))
    return ctx if ctx.prec >= need else ctx.with_prec(need)


def exp_neg_u(ctx, prec) -> ComplexBall:
    return ball_exp(ComplexBall.from_real(real_neg(ctx.u)), prec)


def parity_index(n) -> int:
    return char_index([int(x) & 1 for x in n])


def zero_char_sums(ctx, N: int, variant: str = "best", shifted: bool = False, counter: dict | None = None) -> list[ComplexBall]:
    """θ̃_{0,b}(z,τ) for all b by summing every point of the ellipsoid with its own exponential.

    With shifted=True the error is at most 2^-N·exp(-Dist(v, Z^g)²) instead of 2^-N.
    """
    g = ctx.g
    dist = dist_sq(ctx.C, ctx.v) if shifted or variant != "A" else None
    R = radius_for_sum(ctx, N, variant, dist, shifted)
    tree = build_ellipsoid(ctx.C_f, ctx.v_f, R * R, v_radius=v_radius(ctx))
    n0 = N + 2 * max(tree.count, 1).bit_length() + 5
    ctx = working_ctx(ctx, n0)
    pa = n0 + arg_bits(ctx, tree) + 4
    bins: list[list[ComplexBall]] = [[] for _ in range(1 << g)]
    for n in tree.points():
        bins[parity_index(n)].append(exp_pi_i(point_arg(ctx.tau, ctx.z, n, pa), n0))
    if counter is not None:
        counter["points"] = counter.get("points", 0) + tree.count
    sums = hadamard([ball_sum(b, n0) for b in bins], n0)
    f = exp_neg_u(ctx, n0)
    pad = tail_pad(N, dist if shifted else None)
    logger.debug("naive sum over %d points at %d bits", tree.count, n0)
    return [add_error(ball_mul(s, f, n0), pad) for s in sums]


def sum_naive(ctx, N, chars=None, variant: str = "best", shifted: bool = False) -> ThetaValues:
    """θ̃_{a,b}(z,τ) for the requested characteristics (all by default) by direct summation."""
    N = bits(N)
    g = ctx.g
    chars = all_chars(g) if chars is None else list(chars)
    out = {}
    meta = {"engine": "sum-naive"}
    for a in sorted({ch[0] for ch in chars}):
        ctx_a, cof = sum_a_shift(ctx, a, N + 16)
        sums = zero_char_sums(ctx_a, N + 1, variant, shifted, meta)
        for a2, b in chars:
            if a2 == a:
                out[(a, b)] = ball_mul_i(ball_mul(cof, sums[b], N + 8), char_phase(a, b))
    return ThetaValues(g, out, prec=N, meta=meta)


def theta_values_plain(z: BallVector, tau: BallMatrix, prec) -> ThetaValues:
    """Plain θ_{a,b}(z,τ) for all characteristics at any point, by direct summation."""
    from siegel.context import SiegelContext
    p = bits(prec)
    ctx = SiegelContext.create(z, tau, p + 16)
    extra = int(to_float(ctx.u.upper()) / log(2)) + 8
    return to_plain(sum_naive(ctx, p + extra), ctx, p + extra)


class SumNaive(ThetaEngine):
    """Direct summation over the ellipsoid, one exponential per point."""

    name = "sum-naive"

    def run(self, ctx, prec) -> ThetaValues:
        shifted = isinstance(prec, Precision) and prec.kind == "shifted"
        return sum_naive(ctx, bits(prec), shifted=shifted)

    def validate_params(self, ctx, prec) -> bool:
        return bits(prec) >= 2 and all(x.is_positive() for x in ctx.c)

    @staticmethod
    def get_bench_params():
        return {1: [64, 256, 1024], 2: [64, 256], 3: [64]}
