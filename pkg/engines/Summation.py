"""
Summation of theta series with one multiplication per ellipsoid point on average.

The exponentials e(nᵀτn + 2nᵀz) are never computed directly: they are built
from the tables q_jj = e(τ_jj), q_jk = e(2τ_jk) (j < k), w_j = e(2z_j) and the
square powers q_jj^{k²}, walking the ellipsoid tree from the last coordinate
down. Each subtree is processed at a relative precision lowered by the
contribution of its fixed coordinates, so that far-away terms cost less.
"""

from dataclasses import dataclass, field
from math import floor, log, log2

from mpmath.libmp import fone, mpf_shift, to_float

import config
from arith.ball import (
    ComplexBall, ONE, Precision, add_error, ball_dot, ball_inv, ball_mul, ball_mul_2exp, ball_mul_i, ball_mul_int,
    ball_sum, bits, exp_pi_i, pi_ball, pow_int,
)
from engines.Base import (
    ThetaEngine, ThetaJet, ThetaValues, all_chars, char_index, hadamard, multi_indices,
)
from engines.SumNaive import (
    arg_bits, char_phase, exp_neg_u, point_arg, sum_a_shift, tail_pad, v_radius, working_ctx,
)
from geometry.bounds import radius_for_jets, radius_for_sum
from geometry.distance import dist_sq
from geometry.ellipsoid import EllipsoidTree, build_ellipsoid

logger = config.get_logger("sum")

TABLE_GUARD = 16


class MulCounter:
    """Ball multiplications weighted by precision relative to the full working precision."""

    def __init__(self, full: int):
        self.full = max(full, 1)
        self.weighted = 0.0
        self.count = 0

    def mul(self, a: ComplexBall, b: ComplexBall, prec: int) -> ComplexBall:
        self.count += 1
        self.weighted += prec / self.full
        return ball_mul(a, b, prec)

    def dot(self, xs, ys, prec: int) -> ComplexBall:
        self.count += len(xs)
        self.weighted += len(xs) * prec / self.full
        return ball_dot(xs, ys, prec)


@dataclass
class ExpTable:
    """Exponentials that depend on τ only, plus the z-dependent w_j when attached.

    q[j][k] for j <= k holds e(τ_jj) on the diagonal and e(2τ_jk) above it.
    squares[j][k] = q[j][j]^{k²}; the lists grow on demand.
    """
    g: int
    prec: int
    q: list[list[ComplexBall | None]]
    q_inv: list[list[ComplexBall | None]]
    squares: list[list[ComplexBall]] = field(repr=False)
    w: list[ComplexBall] | None = None
    w_inv: list[ComplexBall] | None = None
    tau: list = field(default_factory=list, repr=False)

    @classmethod
    def for_tau(cls, tau, prec) -> "ExpTable":
        g = len(tau)
        table = cls(g, 0, [], [], [], tau=tau)
        table.ensure_prec(prec)
        return table

    def ensure_prec(self, prec):
        """Recompute the τ tables in place if they were built below prec (+ guard) bits."""
        p = bits(prec) + TABLE_GUARD
        if self.prec >= p:
            return
        g = self.g
        self.q = [[None] * g for _ in range(g)]
        self.q_inv = [[None] * g for _ in range(g)]
        for j in range(g):
            for k in range(j, g):
                x = self.tau[j][k] if j == k else ball_mul_2exp(self.tau[j][k], 1)
                self.q[j][k] = exp_pi_i(x, p)
                self.q_inv[j][k] = ball_inv(self.q[j][k], p)
        self.squares = [[ONE] for _ in range(g)]
        self.prec = p

    def with_z(self, z) -> "ExpTable":
        w = [exp_pi_i(ball_mul_2exp(x, 1), self.prec) for x in z]
        return ExpTable(self.g, self.prec, self.q, self.q_inv, self.squares, w, [ball_inv(x, self.prec) for x in w],
                        self.tau)

    def square(self, j: int, k: int) -> ComplexBall:
        """q_jj^{k²}, by q^{(k+1)²} = q^{k²}·q^{2k+1}."""
        k = abs(k)
        sq = self.squares[j]
        if len(sq) <= k:
            qq = self.q[j][j]
            q2 = ball_mul(qq, qq, self.prec)
            odd = pow_int(qq, 2 * len(sq) - 1, self.prec)
            while len(sq) <= k:
                sq.append(ball_mul(sq[-1], odd, self.prec))
                odd = ball_mul(odd, q2, self.prec)
        return sq[k]

    def off(self, j: int, i: int) -> tuple[ComplexBall, ComplexBall]:
        """e(2τ_ji) and its inverse for j < i."""
        return self.q[j][i], self.q_inv[j][i]


def powers(x: ComplexBall, x_inv: ComplexBall, lo: int, hi: int, prec: int, counter: MulCounter) -> dict[int, ComplexBall]:
    """x^n for lo <= n <= hi, stepping outward from the element of [lo, hi] closest to 0."""
    if lo > hi:
        return {}
    start = min(max(0, lo), hi)
    out = {start: pow_int(x, start, prec) if start >= 0 else pow_int(x_inv, -start, prec)}
    for n in range(start + 1, hi + 1):
        out[n] = counter.mul(out[n - 1], x, prec)
    for n in range(start - 1, lo - 1, -1):
        out[n] = counter.mul(out[n + 1], x_inv, prec)
    return out


def _subtree_prec(n0: int, partial: float) -> int:
    return max(config.MIN_TERM_PREC, n0 - int(partial / log(2)))


def _leaf(node: EllipsoidTree, F: ComplexBall, W: ComplexBall, W_inv: ComplexBall, table: ExpTable, prec: int,
          bins: list[list[ComplexBall]], counter: MulCounter):
    pw = powers(W, W_inv, node.lo, node.hi, prec, counter)
    rest = [x & 1 for x in node.fixed]
    for par in (0, 1):
        ns = [n for n in range(node.lo, node.hi + 1) if n & 1 == par]
        if not ns:
            continue
        A = counter.dot([table.square(0, n) for n in ns], [pw[n] for n in ns], prec)
        bins[char_index([par] + rest)].append(counter.mul(F, A, prec))


def _descend(node: EllipsoidTree, F: ComplexBall, W: list[ComplexBall], W_inv: list[ComplexBall], table: ExpTable,
             n0: int, bins: list[list[ComplexBall]], counter: MulCounter):
    """Sum the subtree with the coordinates above node.d fixed; W, W_inv hold the d current line factors."""
    if node.count == 0:
        return
    p = _subtree_prec(n0, node.partial)
    if node.d == 1:
        _leaf(node, F, W[0], W_inv[0], table, p, bins, counter)
        return
    i = node.d - 1
    pw = powers(W[i], W_inv[i], node.lo, node.hi, p, counter)
    offs = [powers(*table.off(j, i), node.lo, node.hi, p, counter) for j in range(i)]
    offs_inv = [powers(table.off(j, i)[1], table.off(j, i)[0], node.lo, node.hi, p, counter) for j in range(i)]
    for child in node.children:
        if child.count == 0:
            continue
        n = child.fixed[0]
        pc = _subtree_prec(n0, child.partial)
        F2 = counter.mul(counter.mul(F, table.square(i, n), pc), pw[n], pc)
        W2 = [counter.mul(W[j], offs[j][n], pc) for j in range(i)]
        W2_inv = [counter.mul(W_inv[j], offs_inv[j][n], pc) for j in range(i)]
        _descend(child, F2, W2, W2_inv, table, n0, bins, counter)


def guard_bits(g: int, R: float, count: int) -> int:
    return max(floor(10 * log(max(g * R, 2))), 2 * max(count, 1).bit_length() + 1)


def zero_char_sums(ctx, N: int, table: ExpTable | None = None, variant: str = "best", shifted: bool = False,
                   meta: dict | None = None) -> list[ComplexBall]:
    """θ̃_{0,b}(z,τ) for all b, within 2^-N (or 2^-N·exp(-Dist²) when shifted)."""
    g = ctx.g
    dist = dist_sq(ctx.C, ctx.v) if shifted or variant != "A" else None
    R = radius_for_sum(ctx, N, variant, dist, shifted)
    tree = build_ellipsoid(ctx.C_f, ctx.v_f, R * R, v_radius=v_radius(ctx))
    n0 = N + guard_bits(g, R, tree.count)
    ctx = working_ctx(ctx, n0)
    if table is None:
        table = ExpTable.for_tau(ctx.tau, n0 + arg_bits(ctx, tree))
    table.ensure_prec(n0 + arg_bits(ctx, tree))
    zt = table.with_z(ctx.z)
    counter = MulCounter(n0)
    bins: list[list[ComplexBall]] = [[] for _ in range(1 << g)]
    _descend(tree, ONE, list(zt.w), list(zt.w_inv), zt, n0, bins, counter)
    sums = hadamard([ball_sum(b, n0) for b in bins], n0)
    f = exp_neg_u(ctx, n0)
    pad = tail_pad(N, dist if shifted else None)
    if meta is not None:
        meta["points"] = meta.get("points", 0) + tree.count
        meta["mults"] = meta.get("mults", 0.0) + counter.weighted
    logger.debug("summation over %d points at %d bits, %.1f weighted multiplications",
                 tree.count, n0, counter.weighted)
    return [add_error(ball_mul(s, f, n0), pad) for s in sums]


def sum_optimized(ctx, N, chars=None, table: ExpTable | None = None, variant: str = "best",
                  shifted: bool = False) -> ThetaValues:
    """θ̃_{a,b}(z,τ) for the requested characteristics (all by default) by table-driven summation.

    A table computed for the same τ may be passed to share its precomputations across z.
    """
    N = bits(N)
    g = ctx.g
    chars = all_chars(g) if chars is None else list(chars)
    meta = {"engine": "sum"}
    if table is None:
        table = ExpTable.for_tau(ctx.tau, N)
    out = {}
    for a in sorted({ch[0] for ch in chars}):
        ctx_a, cof = sum_a_shift(ctx, a, N + 16)
        sums = zero_char_sums(ctx_a, N + 1, table, variant, shifted, meta)
        for a2, b in chars:
            if a2 == a:
                out[(a, b)] = ball_mul_i(ball_mul(cof, sums[b], N + 8), char_phase(a, b))
    if meta.get("points"):
        meta["mults_per_point"] = meta["mults"] / meta["points"]
    return ThetaValues(g, out, prec=N, meta=meta)


def sum_jets(ctx, N, B: int, chars=None) -> ThetaJet:
    """∂^ν θ_{a,b}(z,τ) for |ν| <= B, within 2^-N, by differentiating the series termwise.

    Values are plain derivatives of θ, not of θ̃.
    """
    if B < 0:
        raise ValueError("order must be nonnegative")
    N = bits(N)
    g = ctx.g
    chars = all_chars(g) if chars is None else list(chars)
    nus = multi_indices(g, B)
    R = radius_for_jets(ctx, N + 1, B)
    u_bits = int(to_float(ctx.u.upper()) / log(2)) + 1
    pi2 = ball_mul_2exp(pi_ball(N + u_bits + 64), 1)
    out: dict = {ch: {} for ch in chars}
    for a in sorted({ch[0] for ch in chars}):
        shift = [((a >> (g - 1 - j)) & 1) / 2 for j in range(g)]
        center = ctx.v_f - shift
        tree = build_ellipsoid(ctx.C_f, center, R * R, v_radius=v_radius(ctx))
        m_bits = int(log2(max(tree.box, default=0) + 1)) + 1
        wp = N + u_bits + B * m_bits + 2 * max(tree.count, 1).bit_length() + 10
        pa = wp + arg_bits(ctx, tree) + 4
        bins = {nu: [[] for _ in range(1 << g)] for nu in nus}
        for m in tree.points():
            n2 = [2 * m[j] + ((a >> (g - 1 - j)) & 1) for j in range(g)]  # 2n
            t = exp_pi_i(point_arg(ctx.tau, ctx.z, [x / 2 for x in n2], pa), wp)
            c = char_index([x & 1 for x in m])
            for nu in nus:
                mono = 1
                for x, k in zip(n2, nu):
                    mono *= x ** k
                bins[nu][c].append(ball_mul_2exp(ball_mul_int(t, mono, wp), -sum(nu)))
        for nu in nus:
            k = sum(nu)
            s = hadamard([ball_sum(b, wp) for b in bins[nu]], wp)
            f = ball_mul_i(pow_int(pi2, k, wp), k)
            for a2, b in chars:
                if a2 == a:
                    x = ball_mul_i(ball_mul(f, s[b], wp), char_phase(a, b))
                    out[(a, b)][nu] = add_error(x, mpf_shift(fone, -N - 1))
        logger.debug("jets of order %d over %d points at %d bits", B, tree.count, wp)
    return ThetaJet(g, B, out, prec=N)


class Summation(ThetaEngine):
    """Table-driven summation over the ellipsoid."""

    name = "sum"

    def run(self, ctx, prec) -> ThetaValues:
        shifted = isinstance(prec, Precision) and prec.kind == "shifted"
        return sum_optimized(ctx, bits(prec), shifted=shifted)

    def validate_params(self, ctx, prec) -> bool:
        return bits(prec) >= 2 and all(x.is_positive() for x in ctx.c)

    @staticmethod
    def get_bench_params():
        return {1: [64, 256, 1024, 4096], 2: [64, 256, 1024, 4096], 3: [64, 256, 1024]}
