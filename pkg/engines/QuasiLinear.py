"""
Evaluation of all theta values in time quasi-linear in the precision.

Values at (2^h x, 2^h τ) for x in {0, t, 2t, z+t, z+2t} are computed by
summation, or as short sums of lower-dimensional values when some Cholesky
diagonals are large, and brought down to τ by h duplication steps. Square
roots are selected with low-precision values at the auxiliary real vector t;
the values at 0 and at z are obtained by divisions, never by square roots.

All values are θ̃ (normalized by exp(-π yᵀY⁻¹y)); at real x this is θ itself.
Working precisions are relative, which gives absolute precision shifted by the
natural size exp(-2^j Dist(v, Z^g + a/2)²) of each value.
"""

from dataclasses import dataclass, field
from math import ceil, floor, log, log2, prod, sqrt
from typing import Sequence

import numpy as np
from mpmath.libmp import from_int, fzero, mpf_shift, to_float

import config
from arith.ball import (
    ComplexBall, RealBall, ZERO, Precision, add_error, ball_add, ball_div, ball_exp, ball_mul, ball_mul_2exp, ball_mul_i,
    ball_mul_int, ball_neg, ball_sqr, ball_sum, bits, exp_pi_i, mag_log2, radd, real_sub, rmul, sqrt_with_hint,
)
from arith.matrix import BallMatrix, BallVector
from engines.Base import Char, ThetaEngine, ThetaValues, all_chars, hadamard, is_odd, parity
from engines.SumNaive import char_phase, point_arg, sum_naive, tail_pad, v_radius, working_ctx
from engines.Summation import ExpTable, sum_optimized
from errors import AmbiguousRoot, DivisionByZeroBall
from geometry.bounds import radius_for_sum
from geometry.distance import DistanceProfile, distance_profile, distances
from geometry.ellipsoid import build_ellipsoid
from siegel.context import SiegelContext, reduce_z, tilde_phase, zero_vector

logger = config.get_logger("ql")

LINES = ("t", "2t", "z+t", "z+2t")
POINTS = ("0",) + LINES


def dupl_products(t: Sequence[ComplexBall], u: Sequence[ComplexBall], prec, b: int = 0,
                  extra_bits: int = 0) -> list[ComplexBall]:
    """(Σ_{a'} (-1)^{a'ᵀb} t_{a'} u_{a+a'})_a, a+a' taken mod 2.

    Computed as 2^-g H(H(t)·H(u)) on midpoints; the input radii enter through an
    explicit bound m_t ε_u + m_u ε_t + ε_t ε_u per term. Passing the same list
    twice with b = 0 takes the squaring path.

    The midpoint transforms run extra_bits above prec: an output entry whose
    natural size is 2^-extra_bits times the largest one still gets prec bits.
    """
    p = bits(prec)
    n = len(t)
    g = n.bit_length() - 1
    wp = p + max(0, extra_bits) + 2 * g + 8
    square = t is u and b == 0
    tm = [ComplexBall(x.re, x.im) for x in t]
    tm = [ball_neg(x) if parity(a, b) else x for a, x in enumerate(tm)]
    ht = hadamard(tm, wp)
    if square:
        hh = [ball_sqr(x, wp) for x in ht]
    else:
        hu = hadamard([ComplexBall(x.re, x.im) for x in u], wp)
        hh = [ball_mul(x, y, wp) for x, y in zip(ht, hu)]
    mids = [ball_mul_2exp(x, -g) for x in hadamard(hh, wp)]
    mt, et = [x.mid_abs_upper() for x in t], [x.rad for x in t]
    mu, eu = [x.mid_abs_upper() for x in u], [x.rad for x in u]
    out = []
    for a in range(n):
        err = radd(*(radd(rmul(mt[c], eu[a ^ c]), rmul(mu[a ^ c], et[c]), rmul(et[c], eu[a ^ c])) for c in range(n)))
        out.append(add_error(mids[a], err))
    return out


def scaled(x: BallVector, j: int) -> BallVector:
    return [ball_mul_2exp(c, j) for c in x]


def scaled_tau(tau: BallMatrix, j: int) -> BallMatrix:
    return [[ball_mul_2exp(c, j) for c in row] for row in tau]


def line_point(name: str, z: BallVector, t: BallVector, prec) -> BallVector:
    """The point x for a line name in {0, z, t, 2t, z+t, z+2t}."""
    if name == "0":
        return zero_vector(len(z))
    if name == "z":
        return list(z)
    tt = t if name in ("t", "z+t") else scaled(t, 1)
    if name in ("t", "2t"):
        return tt
    return [ball_add(x, y, prec) for x, y in zip(z, tt)]


def is_zero_vector(z: BallVector) -> bool:
    return all(x == ZERO for x in z)


def dyadic_vector(t: Sequence[int], D: int) -> BallVector:
    """Exact balls k/D for a power-of-two D."""
    e = D.bit_length() - 1
    return [ComplexBall(mpf_shift(from_int(k), -e)) for k in t]


@dataclass
class AuxChoice:
    """Auxiliary vector t = k/D and the low-precision values that certify it.

    hints[j][line][a] holds θ̃_{a,0}(2^j x, 2^j τ) for 1 <= j < h; base[(a,b)]
    holds θ̃_{a,b}(z + 2t, τ). losses[j] is the number of bits by which the
    smallest value at level j falls below its natural size.
    """
    t: list[int]
    D: int
    eta_bits: int
    hints: dict[int, dict[str, list[ComplexBall]]]
    base: dict[Char, ComplexBall]
    losses: dict[int, int]

    def vector(self) -> BallVector:
        return dyadic_vector(self.t, self.D)

    def is_zero(self) -> bool:
        return not any(self.t)


def _natural_log2(profile: DistanceProfile, j: int, a: int, line: str) -> float:
    d = profile.v[a] if line.startswith("z") else profile.zero[a]
    return -(2 ** j) * float(d) / log(2)


def _size_loss(x: ComplexBall, natural: float, eta_bits: int) -> int | None:
    """Bits lost below the natural size, or None when |x| is not certified above 2^-eta_bits times it."""
    lo = x.abs_lower()
    if lo == fzero:
        return None
    e = mag_log2(lo)
    if e < natural - eta_bits:
        return None
    return max(0, ceil(natural) - e)


def _try_aux(ctx, h: int, profile: DistanceProfile, t: list[int], D: int, eta_bits: int,
             start: int = 0) -> AuxChoice | None:
    g = ctx.g
    lp = config.LOWPREC_BITS
    tv = dyadic_vector(t, D)
    chars0 = [(a, 0) for a in range(1 << g)]
    hints: dict[int, dict[str, list[ComplexBall]]] = {}
    losses: dict[int, int] = {}
    for j in range(max(start, 1), h):
        cj = SiegelContext.create(zero_vector(g), scaled_tau(ctx.tau, j), lp + 16)
        table = ExpTable.for_tau(cj.tau, lp)
        hints[j] = {}
        loss = 0
        for line in LINES:
            x = scaled(line_point(line, ctx.z, tv, lp + 16), j)
            vals = sum_optimized(cj.with_z(x), lp, chars0, table=table, shifted=True)
            row = [vals[(a, 0)] for a in range(1 << g)]
            for a, y in enumerate(row):
                l = _size_loss(y, _natural_log2(profile, j, a, line), eta_bits)
                if l is None:
                    return None
                loss = max(loss, l)
            hints[j][line] = row
        losses[j] = loss
    if start > 0:
        return AuxChoice(t, D, eta_bits, hints, {}, losses)
    c0 = SiegelContext.create(ctx.z, ctx.tau, lp + 16)
    zero_odd = is_zero_vector(ctx.z) and not any(t)
    vals = sum_optimized(c0.with_z(line_point("z+2t", ctx.z, tv, lp + 16)), lp, shifted=True)
    base = {}
    loss = 0
    for ch in all_chars(g):
        if zero_odd and is_odd(ch):
            continue
        l = _size_loss(vals[ch], _natural_log2(profile, 0, ch[0], "z+2t"), eta_bits)
        if l is None:
            return None
        loss = max(loss, l)
        base[ch] = vals[ch]
    losses[0] = loss
    return AuxChoice(t, D, eta_bits, hints, base, losses)


def choose_aux(ctx, h: int, profile: DistanceProfile, rng: np.random.Generator | None = None,
               start: int = 0) -> AuxChoice | None:
    """Auxiliary vector for h duplication steps; t = 0 is tried first, then random dyadic vectors.

    Only levels start..h-1 are certified; with start > 0 the levels below are
    handled without t. After AUX_FAILURES_PER_LEVEL rejections the size
    threshold η and the denominator D are relaxed; None after
    AUX_MAX_ESCALATIONS relaxations.
    """
    if h < 1 or not 0 <= start < h:
        raise ValueError(f"auxiliary vectors need 0 <= start < h, got start = {start}, h = {h}")
    g = ctx.g
    rng = rng if rng is not None else np.random.default_rng(config.AUX_SEED)
    eta_bits = ceil(10 * h * h * log2(1 + h))
    D = 1 << (4 + g + h)
    first = True
    for level in range(config.AUX_MAX_ESCALATIONS + 1):
        for _ in range(config.AUX_FAILURES_PER_LEVEL):
            t = [0] * g if first else [int(k) for k in rng.integers(0, D + 1, size=g)]
            first = False
            aux = _try_aux(ctx, h, profile, t, D, eta_bits, start)
            if aux is not None:
                logger.debug("auxiliary vector %s/%d accepted, losses %s", t, D, aux.losses)
                return aux
            logger.debug("auxiliary vector %s/%d rejected", t, D)
        eta_bits *= ceil(2 ** (1 + log2(g) ** 2))
        D <<= g
        logger.info("relaxing auxiliary vector search (level %d): log2(1/eta) = %d, D = 2^%d",
                    level + 1, eta_bits, D.bit_length() - 1)
    return None


@dataclass
class EasyLevels:
    """Levels 0..k-1 where the values at 0 and at z are large enough to be taken as square roots.

    hints[j] holds θ̃_{a,0}(2^j x, 2^j τ) for x in {0, z} and 1 <= j < k;
    base[(a,b)] holds θ̃_{a,b}(z, τ). On these levels the ladder needs no t.
    """
    k: int = 0
    hints: dict[int, dict[str, list[ComplexBall]]] = field(default_factory=dict)
    base: dict[Char, ComplexBall] = field(default_factory=dict)
    losses: dict[int, int] = field(default_factory=dict)


def easy_levels(ctx, h: int, profile: DistanceProfile) -> EasyLevels:
    """The longest run of levels 0, 1, ... below h where every value is within 2^-QL_EASY_BITS of its natural size.

    Odd characteristics are skipped at z = 0, where they vanish.
    """
    g = ctx.g
    lp = config.LOWPREC_BITS
    zero_z = is_zero_vector(ctx.z)
    c0 = SiegelContext.create(ctx.z, ctx.tau, lp + 16)
    vals = sum_optimized(c0, lp, shifted=True)
    base, loss = {}, 0
    for ch in all_chars(g):
        if zero_z and is_odd(ch):
            continue
        l = _size_loss(vals[ch], _natural_log2(profile, 0, ch[0], "z"), config.QL_EASY_BITS)
        if l is None:
            return EasyLevels()
        loss = max(loss, l)
        base[ch] = vals[ch]
    out = EasyLevels(1, {}, base, {0: loss})
    chars0 = [(a, 0) for a in range(1 << g)]
    for j in range(1, h):
        cj = SiegelContext.create(zero_vector(g), scaled_tau(ctx.tau, j), lp + 16)
        table = ExpTable.for_tau(cj.tau, lp)
        rows, loss = {}, 0
        for line in ("0",) if zero_z else ("0", "z"):
            x = scaled(line_point(line, ctx.z, [], lp + 16), j)
            res = sum_optimized(cj.with_z(x), lp, chars0, table=table, shifted=True)
            rows[line] = [res[(a, 0)] for a in range(1 << g)]
            for a, y in enumerate(rows[line]):
                l = _size_loss(y, _natural_log2(profile, j, a, line), config.QL_EASY_BITS)
                if l is None:
                    return out
                loss = max(loss, l)
        if zero_z:
            rows["z"] = rows["0"]
        out.hints[j] = rows
        out.losses[j] = loss
        out.k = j + 1
    return out


def _levels(c0: float, N: int) -> int:
    x = N * log(2) / c0 ** 2
    return floor(log2(x)) + 1 if x > 1 else 0


def split_cost(c: Sequence[float], N: int, d: int) -> float:
    """Rough number of full-precision multiplications for the split (d, h) on the Cholesky diagonal c.

    Counts the points summed at level h (each a d-dimensional evaluation when
    d >= 1, costed recursively) plus 5·2^g products per duplication step.
    """
    g = len(c)
    h = _levels(c[d], N)
    s = 2 ** (h / 2)
    r2 = 2 * sqrt(N * log(2))
    outer = prod(1 + r2 / (s * x) for x in c[d:])
    if d > 0:
        inner = [x * s for x in c[:d]]
        outer *= min(split_cost(inner, N, k) for k in range(d))
    points = 5 if h > 0 else 1
    return points * outer + 5 * 2 ** g * h


def choose_split_params(ctx, N, auto: bool = False) -> tuple[int, int]:
    """(d, h): the dimension kept by the split and the number of duplication steps.

    By default d is the first index after the last jump of the Cholesky
    diagonal by more than SPLIT_THRESHOLD; with auto=True it minimizes
    split_cost instead.
    """
    c = [float(x) for x in ctx.c]
    g = len(c)
    N = bits(N)
    d = 0
    if auto:
        costs = [split_cost(c, N, k) for k in range(g)]
        d = costs.index(min(costs))
    elif max(c) > config.SPLIT_THRESHOLD:
        for j in range(g):
            if c[j] < c[-1] / config.SPLIT_THRESHOLD:
                d = j + 1
    return d, _levels(c[d], N)


def _dist_bits(dists: dict[int, RealBall], scale: int) -> int:
    """ceil(scale·max_a Dist_a² / log 2), from upper bounds."""
    return max(0, ceil(scale * max(to_float(x.upper()) for x in dists.values()) / log(2)))


@dataclass
class PrecisionLedger:
    """Guard bits of the duplication ladder and the acceptance test of its output."""
    N: int
    g: int
    h: int
    profile: DistanceProfile
    eta_bits: int
    losses: dict[int, int] = field(default_factory=dict)

    @property
    def step_guard(self) -> int:
        """Worst-case loss of one step, 10(3 + g log²g) + log2(1/η)."""
        return ceil(10 * (3 + self.g * log2(self.g) ** 2)) + self.eta_bits

    def guard(self) -> int:
        if self.losses:
            return 2 * sum(self.losses.values()) + self.h * (config.QL_STEP_BITS + 2 * self.g) + 16
        return self.h * self.step_guard

    def work_prec(self, scale: int = 1) -> int:
        return self.N + scale * self.guard()

    def hadamard_bits(self, j: int, line: str) -> int:
        """Spread in natural size between the outputs of a duplication product at level j.

        Products of two values at (2^j x, 2^j τ) have natural size
        exp(-2^{j+1} Dist²); lines through z use the distances of v, the
        others those of 0.
        """
        return _dist_bits(self.profile.v if line.startswith("z") else self.profile.zero, 2 ** (j + 1))

    def accepts(self, values: ThetaValues, slack: int = 8) -> bool:
        """Every radius is at most 2^(slack - N)·exp(-Dist(v, Z^g + a/2)²)."""
        for (a, _), x in values.values.items():
            if x.rad == fzero:
                continue
            bound = -self.N + slack - to_float(self.profile.v[a].lower()) / log(2)
            if mag_log2(x.rad) > bound:
                return False
        return True


def dupl_step(vals: dict[str, list[ComplexBall]], hints: dict[str, list[ComplexBall]], prec,
              ledger: PrecisionLedger, j: int) -> dict:
    """Values at (2^j x, 2^j τ) from the values at (2^{j+1} x, 2^{j+1} τ)."""
    new = {}
    for line in LINES:
        sq = dupl_products(vals[line], vals["0"], prec, extra_bits=ledger.hadamard_bits(j, line))
        new[line] = [sqrt_with_hint(x, hint, prec) for x, hint in zip(sq, hints[line])]
    cross = dupl_products(vals["t"], vals["t"], prec, extra_bits=ledger.hadamard_bits(j, "0"))
    new["0"] = [ball_div(x, y, prec) for x, y in zip(cross, new["2t"])]
    return new


def exit_step(vals: dict[str, list[ComplexBall]], hints: dict[str, list[ComplexBall]], prec,
              ledger: PrecisionLedger, j: int) -> dict:
    """Values at (0, 2^j τ) and (2^j z, 2^j τ): the last step that uses t when the levels below are easy."""
    new = {}
    for line in ("2t", "z+2t"):
        sq = dupl_products(vals[line], vals["0"], prec, extra_bits=ledger.hadamard_bits(j, line))
        new[line] = [sqrt_with_hint(x, hint, prec) for x, hint in zip(sq, hints[line])]
    cross = dupl_products(vals["t"], vals["t"], prec, extra_bits=ledger.hadamard_bits(j, "0"))
    out = {"0": [ball_div(x, y, prec) for x, y in zip(cross, new["2t"])]}
    # θ̃(2^j(z+2t))·θ̃(2^j z)
    cross = dupl_products(vals["z+t"], vals["t"], prec, extra_bits=ledger.hadamard_bits(j, "z"))
    out["z"] = [ball_div(x, y, prec) for x, y in zip(cross, new["z+2t"])]
    return out


def easy_step(vals: dict[str, list[ComplexBall]], hints: dict[str, list[ComplexBall]], prec,
              ledger: PrecisionLedger, j: int) -> dict:
    """θ̃_{a,0}(x, 2^j τ) for x in {0, 2^j z} as square roots of Σ_{a'} θ̃_{a',0}(2x, 2^{j+1}τ)θ̃_{a+a',0}(0, 2^{j+1}τ)."""
    new = {}
    for line in ("0", "z"):
        if line == "z" and vals["z"] is vals["0"]:
            new["z"] = new["0"]
            continue
        sq = dupl_products(vals[line], vals["0"], prec, extra_bits=ledger.hadamard_bits(j, line))
        new[line] = [sqrt_with_hint(x, hint, prec) for x, hint in zip(sq, hints[line])]
    return new


def easy_base(vals: dict[str, list[ComplexBall]], easy: EasyLevels, prec, zero_odd: bool,
              ledger: PrecisionLedger) -> dict[Char, ComplexBall]:
    """θ̃_{a,b}(z, τ) as square roots, from the values at (2z, 2τ) and (0, 2τ)."""
    n = len(vals["0"])
    extra = ledger.hadamard_bits(0, "z")
    out = {}
    for b in range(n):
        sq = dupl_products(vals["z"], vals["0"], prec, b, extra)
        for a in range(n):
            if zero_odd and is_odd((a, b)):
                out[(a, b)] = ZERO
                continue
            out[(a, b)] = sqrt_with_hint(sq[a], easy.base[(a, b)], prec)
    return out


def base_step(vals: dict[str, list[ComplexBall]], aux: AuxChoice, prec, zero_odd: bool,
              ledger: PrecisionLedger) -> dict[Char, ComplexBall]:
    """θ̃_{a,b}(z, τ) for all (a, b) from the values at (2x, 2τ)."""
    n = len(vals["0"])
    extra = ledger.hadamard_bits(0, "z")
    out = {}
    for b in range(n):
        sq = dupl_products(vals["z+2t"], vals["0"], prec, b, extra)
        cross = dupl_products(vals["z+t"], vals["t"], prec, b, extra)
        for a in range(n):
            if zero_odd and is_odd((a, b)):
                out[(a, b)] = ZERO
                continue
            r = sqrt_with_hint(sq[a], aux.base[(a, b)], prec)
            out[(a, b)] = ball_div(cross[a], r, prec)
    return out


def _direct(ctx, N: int, d: int, chars, shifted: bool, table: ExpTable | None = None) -> ThetaValues:
    if d == 0:
        return sum_optimized(ctx, N, chars, table=table, shifted=shifted)
    return dimension_split(ctx, d, N, chars, shifted)


def _ql_run(ctx, d: int, h: int, aux: AuxChoice | None, easy: EasyLevels, p: int,
            ledger: PrecisionLedger) -> dict[Char, ComplexBall]:
    """Levels h-1..k+1 go through t, level k leaves it, levels k-1..0 are easy (k = easy.k)."""
    g = ctx.g
    k = easy.k
    zero_z = is_zero_vector(ctx.z)
    cp = p + 32 + max(0, int(log2(1 + abs(float(ctx.u)) * 2 ** h)))
    ctx_h = SiegelContext.create(zero_vector(g), scaled_tau(ctx.tau, h), cp)
    table = ExpTable.for_tau(ctx_h.tau, p) if d == 0 else None
    tv = aux.vector() if aux is not None else zero_vector(g)
    chars0 = [(a, 0) for a in range(1 << g)]
    if k < h:
        names = POINTS
    else:
        names = ("0",) if zero_z else ("0", "z")
    vals = {}
    for name in names:
        x = scaled(line_point(name, ctx.z, tv, cp), h)
        res = _direct(ctx_h.with_z(x), p, d, chars0, True, table)
        vals[name] = [res[(a, 0)] for a in range(1 << g)]
    for j in range(h - 1, k, -1):
        vals = dupl_step(vals, aux.hints[j], p, ledger, j)
    if k == 0:
        return base_step(vals, aux, p, zero_z and aux.is_zero(), ledger)
    if k < h:
        vals = exit_step(vals, aux.hints[k], p, ledger, k)
    if zero_z:
        vals["z"] = vals["0"]
    for j in range(k - 1, 0, -1):
        vals = easy_step(vals, easy.hints[j], p, ledger, j)
    return easy_base(vals, easy, p, zero_z, ledger)


def _fallback(ctx, N: int, reason: str) -> ThetaValues:
    logger.warning("%s; falling back to direct summation at %d bits", reason, N)
    values = sum_naive(ctx, N, shifted=True)
    values.meta.update(engine="ql", fallback=reason)
    return values


def ql_all(ctx, N, shifted: bool = False, zero_profile: dict | None = None,
           early_switch: bool = config.QL_EARLY_SWITCH, auto_split: bool = config.QL_AUTO_SPLIT) -> ThetaValues:
    """All θ̃_{a,b}(z,τ) at a reduced point.

    With h >= 1 duplication steps the output has shifted absolute precision N;
    with h = 0 the values are summed directly at absolute precision N (shifted
    when requested). early_switch lets the lowest levels skip t when their
    values are large; auto_split picks d by split_cost.
    """
    N = bits(N)
    g = ctx.g
    d, h = choose_split_params(ctx, N, auto_split)
    if h == 0:
        values = _direct(ctx, N, d, all_chars(g), shifted)
        values.meta.update(engine="ql", d=d, h=0)
        return values
    profile = distance_profile(ctx, zero=zero_profile)
    easy = easy_levels(ctx, h, profile) if early_switch else EasyLevels()
    aux = None
    if easy.k < h:
        aux = choose_aux(ctx, h, profile, start=easy.k)
        if aux is None:
            return _fallback(ctx, N, f"no auxiliary vector for h = {h}")
    losses = dict(aux.losses) if aux is not None else {}
    losses.update(easy.losses)
    eta_bits = aux.eta_bits if aux is not None else config.QL_EASY_BITS
    ledger = PrecisionLedger(N, g, h, profile, eta_bits, losses)
    meta = {"engine": "ql", "d": d, "h": h, "easy": easy.k, "t": (aux.t, aux.D) if aux is not None else None}
    scale = 1
    reason = "square roots stayed ambiguous"
    for _ in range(config.AMBIGUOUS_RETRIES + 1):
        p = ledger.work_prec(scale)
        scale *= 2
        try:
            out = _ql_run(ctx, d, h, aux, easy, p, ledger)
        except (AmbiguousRoot, DivisionByZeroBall) as e:
            logger.info("duplication at %d bits failed (%s), doubling the guard", p, e)
            reason = "square roots stayed ambiguous"
            continue
        values = ThetaValues(g, out, prec=N, meta=dict(meta, work_prec=p))
        if ledger.accepts(values):
            logger.debug("ql at %d bits: d = %d, h = %d, %d easy levels, working precision %d", N, d, h, easy.k, p)
            return values
        logger.info("radii above target at %d bits, doubling the guard", p)
        reason = "duplication output missed its target precision"
    return _fallback(ctx, N, reason)


def ql_at(ctx, N, shifted: bool = True, zero_profile: dict | None = None) -> ThetaValues:
    """ql_all at a point whose z is not reduced: translate z by an even τw first."""
    z2, w, _ = reduce_z(ctx)
    values = ql_all(ctx.with_z(z2), N, shifted, zero_profile)
    if any(w):
        p = bits(N) + 8
        phase = tilde_phase(ctx, w)
        values = ThetaValues(ctx.g, {ch: ball_mul(phase, x, p) for ch, x in values.values.items()},
                             prec=values.prec, meta=values.meta)
    return values


def ql_batch(ctx, zs: Sequence[BallVector], N, shifted: bool = True) -> list[ThetaValues]:
    """θ̃ at several z for the same τ, sharing the distance profile of 0."""
    zero = distances(ctx.C, [RealBall()] * ctx.g)
    return [ql_at(ctx.with_z(list(z)), N, shifted, zero) for z in zs]


def _split_factor(ctx, tau1: BallMatrix, z2: BallVector, n2: list[float], u0, p: int) -> ComplexBall:
    """e(n''ᵀτ₁n'' + 2n''ᵀz'')·exp(u₀ - u); its modulus is exp(-‖C₁(n'' - v'')‖²)."""
    est = sum(abs(x) for x in n2) ** 2 * max(abs(complex(x)) for row in tau1 for x in row)
    est += 2 * sum(abs(x) for x in n2) * max(abs(complex(x)) for x in z2)
    pa = p + int(log2(1 + est)) + 8
    arg = point_arg(tau1, z2, n2, pa)
    scale = ball_exp(ComplexBall.from_real(real_sub(u0, ctx.u, pa)), p)
    return ball_mul(exp_pi_i(arg, p), scale, p)


def dimension_split(ctx, d: int, N, chars=None, shifted: bool = False) -> ThetaValues:
    """θ̃_{a,b}(z,τ) as short sums over n'' (the last g - d coordinates) of d-dimensional values.

    θ̃_{a,b}(z,τ) = Σ_{n''} e(n''ᵀτ₁n'' + 2n''ᵀ(z'' + b''/2))·exp(u₀ - u)·θ̃_{a',b'}(z' + σn'', τ₀),
    n'' running over Z^{g-d} + a''/2 inside the ellipsoid of the lower-right Cholesky block.
    """
    N = bits(N)
    g = ctx.g
    if not 1 <= d < g:
        raise ValueError(f"split dimension must be in [1, {g - 1}], got {d}")
    e = g - d
    low = (1 << e) - 1
    chars = all_chars(g) if chars is None else list(chars)
    tau0 = [row[:d] for row in ctx.tau[:d]]
    sig = [row[d:] for row in ctx.tau[:d]]
    tau1 = [row[d:] for row in ctx.tau[d:]]
    z1, z2 = ctx.z[:d], ctx.z[d:]
    dists = distances(ctx.C, ctx.v)
    base0 = SiegelContext.create(zero_vector(d), tau0, N + 32)
    sums: dict[Char, list[ComplexBall]] = {ch: [] for ch in chars}
    p_sum = N + 8
    count = 0
    for a2 in sorted({a & low for a, _ in chars}):
        group = [dists[a] for a in range(1 << g) if a & low == a2]
        # smallest lower and largest upper bound over the characteristics sharing a''
        dist = RealBall.interval(min((x.lower() for x in group), key=to_float),
                                 max((x.upper() for x in group), key=to_float))
        R = radius_for_sum(ctx, N + 1, "best", dist, shifted)
        half = [((a2 >> (e - 1 - k)) & 1) / 2 for k in range(e)]
        tree = build_ellipsoid(ctx.C_f[d:, d:], ctx.v_f[d:] - np.array(half), R * R, v_radius=v_radius(ctx)[d:])
        n_in = N + 2 * max(tree.count, 1).bit_length() + 4
        p_sum = max(p_sum, n_in)
        count += tree.count
        for m in tree.points():
            n2 = [m[k] + half[k] for k in range(e)]
            shift = [ball_sum((ball_mul_2exp(ball_mul_int(sig[i][k], int(2 * n2[k]), n_in + 16), -1)
                               for k in range(e)), n_in + 16) for i in range(d)]
            ctx0 = working_ctx(base0.with_z([ball_add(x, y, n_in + 16) for x, y in zip(z1, shift)]), n_in + 16)
            inner = ql_at(ctx0, n_in)
            f = _split_factor(ctx, tau1, z2, n2, ctx0.u, n_in)
            for a, b in chars:
                if a & low != a2:
                    continue
                b2 = b & low
                k = 2 * sum(m[i] * ((b2 >> (e - 1 - i)) & 1) for i in range(e)) + char_phase(a2, b2)
                sums[(a, b)].append(ball_mul_i(ball_mul(f, inner[(a >> e, b >> e)], n_in), k))
    out = {}
    for a, b in chars:
        pad = tail_pad(N + 1, dists[a] if shifted else None)
        out[(a, b)] = add_error(ball_sum(sums[(a, b)], p_sum), pad)
    logger.debug("split at d = %d over %d outer points", d, count)
    return ThetaValues(g, out, prec=N, meta={"engine": "ql", "split": d, "outer_points": count})


def ql_squares(ctx, N) -> ThetaValues:
    """θ̃_{a,b}(z,τ)² for all (a,b), from values at (2z, 2τ) and (0, 2τ) only."""
    N = bits(N)
    g = ctx.g
    p = N + g + 8
    c2 = SiegelContext.create(scaled(ctx.z, 1), scaled_tau(ctx.tau, 1), p + 16)
    at_z = ql_at(c2, p)
    at_0 = at_z if is_zero_vector(ctx.z) else ql_all(c2.with_z(zero_vector(g)), p, shifted=True)
    tz = [at_z[(a, 0)] for a in range(1 << g)]
    t0 = tz if at_0 is at_z else [at_0[(a, 0)] for a in range(1 << g)]
    extra = _dist_bits(distances(ctx.C, ctx.v), 2)
    out = {}
    for b in range(1 << g):
        sq = dupl_products(tz, t0, p, b, extra)
        for a in range(1 << g):
            out[(a, b)] = sq[a]
    return ThetaValues(g, out, prec=N, meta={"engine": "ql", "squares": True})


def ql_theta00(ctx, N) -> ComplexBall:
    """θ̃_{0,0}(z,τ) = Σ_a θ̃_{a,0}(2z, 4τ)."""
    N = bits(N)
    g = ctx.g
    p = N + g + 4
    c4 = SiegelContext.create(scaled(ctx.z, 1), scaled_tau(ctx.tau, 2), p + 16)
    vals = ql_at(c4, p)
    return ball_sum((vals[(a, 0)] for a in range(1 << g)), p)


class QuasiLinear(ThetaEngine):
    """Duplication formulas from values at 2^h τ, with auxiliary-vector square root selection."""

    name = "ql"

    def run(self, ctx, prec) -> ThetaValues:
        shifted = isinstance(prec, Precision) and prec.kind == "shifted"
        return ql_all(ctx, bits(prec), shifted=shifted)

    def validate_params(self, ctx, prec) -> bool:
        return bits(prec) >= 2 and all(x.is_positive() for x in ctx.c)

    @staticmethod
    def get_bench_params():
        return {1: [256, 1024, 4096, 16384], 2: [256, 1024, 4096, 16384], 3: [256, 1024, 4096]}
