"""
Midpoint-radius ball arithmetic.

Midpoints are raw binary floats of mpmath.libmp (sign, mantissa, exponent,
bitcount tuples) so that every operation can be rounded at its own precision.
Radii are kept at RADIUS_BITS bits and always rounded upward; a radius that
overflows saturates to +inf, which downstream code reads as "no information".

Every operation returns a ball containing the image of its input balls.
Transcendental midpoints (exp, log, sqrt, pi) are computed by mpmath with
GUARD_BITS extra bits and the result is padded by 2^(1-prec)|value|.
"""

from dataclasses import dataclass
from typing import Iterable, Sequence, TypeAlias

from mpmath.libmp import (
    fzero, fone, finf, fnan,
    round_nearest, round_floor, round_ceiling,
    mpf_add, mpf_sub, mpf_mul, mpf_div, mpf_neg, mpf_abs, mpf_pos, mpf_shift,
    mpf_sqrt, mpf_exp, mpf_log, mpf_pi, mpf_lt, mpf_le, mpf_sum,
    mpf_floor,
    mpc_expjpi, mpc_exp, mpc_sqrt,
    from_int, from_float, from_str, to_float, to_int,
)

import config
from errors import AmbiguousRoot, DivisionByZeroBall

MPF: TypeAlias = tuple

RAD = config.RADIUS_BITS
GUARD = config.GUARD_BITS
PREC_KINDS = ("absolute", "relative", "shifted")


@dataclass(frozen=True)
class Precision:
    """Target precision in bits, with the sense in which it is meant."""
    bits: int
    kind: str = "absolute"

    def __post_init__(self):
        if self.bits < 2:
            raise ValueError(f"precision must be at least 2 bits, got {self.bits}")
        if self.kind not in PREC_KINDS:
            raise ValueError(f"unknown precision kind {self.kind!r}")


def bits(prec) -> int:
    return prec.bits if isinstance(prec, Precision) else int(prec)


# --- radius helpers (RAD bits, rounded up) ---

def _sat(r: MPF) -> MPF:
    return finf if r == fnan else r


def up(x: MPF) -> MPF:
    """Upper bound on |x| with RAD bits."""
    if x == fnan:
        return finf
    return mpf_abs(x, RAD, round_ceiling)


def radd(*xs: MPF) -> MPF:
    r = fzero
    for x in xs:
        if x != fzero:
            r = mpf_add(r, x, RAD, round_ceiling)
    return _sat(r)


def rmul(x: MPF, y: MPF) -> MPF:
    if x == fzero or y == fzero:
        return fzero
    return _sat(mpf_mul(x, y, RAD, round_ceiling))


def rdiv(x: MPF, y: MPF) -> MPF:
    """Upper bound on x/y for x >= 0 and a lower bound y > 0."""
    if x == fzero:
        return fzero
    if mpf_le(y, fzero):
        return finf
    return _sat(mpf_div(x, y, RAD, round_ceiling))


def rel(x: MPF, k: int) -> MPF:
    """Upper bound on 2^-k |x|."""
    if x == fzero:
        return fzero
    return mpf_shift(up(x), -k)


def lower_sub(x: MPF, y: MPF) -> MPF:
    """Lower bound on x - y, clamped at 0."""
    d = mpf_sub(x, y, RAD, round_floor)
    return d if mpf_lt(fzero, d) else fzero


def _round(x: MPF, prec: int) -> tuple[MPF, MPF]:
    y = mpf_pos(x, prec, round_nearest)
    return y, (fzero if y == x else rel(y, prec))


def _sum(xs: Sequence[MPF], prec: int) -> tuple[MPF, MPF]:
    return _round(mpf_sum(xs), prec)


_ONE_PLUS = mpf_add(fone, mpf_shift(fone, -20))
PI_UP = mpf_mul(mpf_pi(RAD + 10), _ONE_PLUS, RAD, round_ceiling)
PI_LO = mpf_div(mpf_pi(RAD + 10), _ONE_PLUS, RAD, round_floor)


def expm1_up(t: MPF) -> MPF:
    """Upper bound on exp(t) - 1 for t >= 0."""
    if t == fzero:
        return fzero
    if t == finf:
        return finf
    if mpf_le(t, fone):
        return radd(t, rmul(t, t))
    return _sat(mpf_mul(mpf_exp(t, RAD + 10, round_ceiling), _ONE_PLUS, RAD, round_ceiling))


def exp_up(t: MPF) -> MPF:
    """Upper bound on exp(t) for real t."""
    if t == finf:
        return finf
    return _sat(mpf_mul(mpf_exp(t, RAD + 10, round_ceiling), _ONE_PLUS, RAD, round_ceiling))


def exp_lo(t: MPF) -> MPF:
    return mpf_div(mpf_exp(t, RAD + 10, round_floor), _ONE_PLUS, RAD, round_floor)


# --- real balls ---

@dataclass(frozen=True)
class RealBall:
    mid: MPF = fzero
    rad: MPF = fzero

    @classmethod
    def from_int(cls, n: int) -> "RealBall":
        return cls(from_int(n))

    @classmethod
    def from_float(cls, x: float) -> "RealBall":
        return cls(from_float(x))

    @classmethod
    def from_str(cls, s: str, prec: int) -> "RealBall":
        """Decimal string, outward rounded at prec bits."""
        m = from_str(s, prec, round_nearest)
        exact = from_str(s, prec + 64, round_nearest)
        return cls(m, fzero if m == exact else rel(m, prec))

    @classmethod
    def interval(cls, lo: MPF, hi: MPF) -> "RealBall":
        mid = mpf_shift(mpf_add(lo, hi), -1)
        return cls(mid, up(mpf_sub(hi, mid, RAD, round_ceiling)))

    def upper(self, prec: int = RAD) -> MPF:
        return _sat(mpf_add(self.mid, self.rad, prec, round_ceiling))

    def lower(self, prec: int = RAD) -> MPF:
        return mpf_sub(self.mid, self.rad, prec, round_floor)

    def abs_upper(self) -> MPF:
        return radd(up(self.mid), self.rad)

    def is_positive(self) -> bool:
        return mpf_lt(fzero, self.lower())

    def is_exact(self) -> bool:
        return self.rad == fzero

    def is_finite(self) -> bool:
        return self.rad != finf

    def contains(self, x: MPF) -> bool:
        return mpf_le(up(mpf_sub(x, self.mid)), self.rad)

    def contains_zero(self) -> bool:
        return self.contains(fzero)

    def overlaps(self, other: "RealBall") -> bool:
        return mpf_le(up(mpf_sub(self.mid, other.mid)), radd(self.rad, other.rad))

    def __float__(self) -> float:
        return to_float(self.mid)

    def __repr__(self) -> str:
        return f"RealBall({to_float(self.mid)!r} +/- {to_float(self.rad):.3g})"


def real_add(a: RealBall, b: RealBall, prec) -> RealBall:
    m, e = _sum((a.mid, b.mid), bits(prec))
    return RealBall(m, radd(a.rad, b.rad, e))


def real_sub(a: RealBall, b: RealBall, prec) -> RealBall:
    return real_add(a, real_neg(b), prec)


def real_neg(a: RealBall) -> RealBall:
    return RealBall(mpf_neg(a.mid), a.rad)


def real_sum(xs: Iterable[RealBall], prec) -> RealBall:
    xs = list(xs)
    m, e = _sum([x.mid for x in xs], bits(prec))
    return RealBall(m, radd(e, *[x.rad for x in xs]))


def real_mul(a: RealBall, b: RealBall, prec) -> RealBall:
    m, e = _round(mpf_mul(a.mid, b.mid), bits(prec))
    prop = radd(rmul(up(a.mid), b.rad), rmul(up(b.mid), a.rad), rmul(a.rad, b.rad))
    return RealBall(m, radd(prop, e))


def real_sqr(a: RealBall, prec) -> RealBall:
    return real_mul(a, a, prec)


def real_mul_2exp(a: RealBall, k: int) -> RealBall:
    return RealBall(mpf_shift(a.mid, k), mpf_shift(a.rad, k))


def real_div(a: RealBall, b: RealBall, prec) -> RealBall:
    p = bits(prec)
    blo = lower_sub(mpf_abs(b.mid, RAD, round_floor), b.rad)
    if blo == fzero:
        raise DivisionByZeroBall("denominator ball contains zero")
    m = mpf_div(a.mid, b.mid, p, round_nearest)
    q = radd(up(m), rel(m, p - 1))
    prop = rdiv(radd(a.rad, rmul(q, b.rad)), blo)
    return RealBall(m, radd(prop, rel(m, p)))


def real_sqrt(a: RealBall, prec) -> RealBall:
    """Square root; a ball reaching below zero is clipped to [0, sqrt(upper)]."""
    p = bits(prec)
    lo = a.lower()
    if not mpf_lt(fzero, lo):
        hi = a.upper()
        if mpf_le(hi, fzero):
            return RealBall()
        s = mpf_sqrt(hi, RAD, round_ceiling)
        h = mpf_shift(s, -1)
        return RealBall(h, radd(h, rel(h, RAD - 2)))
    m = mpf_sqrt(a.mid, p, round_nearest)
    slo = mpf_sqrt(lo, RAD, round_floor)
    return RealBall(m, radd(rdiv(a.rad, slo), rel(m, p)))


def real_exp(a: RealBall, prec) -> RealBall:
    p = bits(prec)
    m = mpf_pos(mpf_exp(a.mid, p + GUARD, round_nearest), p, round_nearest)
    return RealBall(m, radd(rel(m, p - 1), rmul(radd(up(m), rel(m, p - 2)), expm1_up(a.rad))))


def real_log(a: RealBall, prec) -> RealBall:
    p = bits(prec)
    lo = a.lower()
    if not mpf_lt(fzero, lo):
        raise DivisionByZeroBall("log of a ball reaching zero")
    m = mpf_pos(mpf_log(a.mid, p + GUARD, round_nearest), p, round_nearest)
    return RealBall(m, radd(rel(m, p - 1), rdiv(a.rad, lo)))


def real_pi(prec) -> RealBall:
    p = bits(prec)
    m = mpf_pi(p, round_nearest)
    return RealBall(m, rel(m, p - 1))


def real_max_upper(xs: Iterable[RealBall]) -> MPF:
    best = fzero
    for x in xs:
        u = x.upper()
        if mpf_lt(best, u):
            best = u
    return best


# --- complex balls ---

@dataclass(frozen=True)
class ComplexBall:
    re: MPF = fzero
    im: MPF = fzero
    rad: MPF = fzero

    @classmethod
    def from_int(cls, re: int, im: int = 0) -> "ComplexBall":
        return cls(from_int(re), from_int(im))

    @classmethod
    def from_complex(cls, z: complex) -> "ComplexBall":
        z = complex(z)
        return cls(from_float(z.real), from_float(z.imag))

    @classmethod
    def from_real(cls, x: RealBall) -> "ComplexBall":
        return cls(x.mid, fzero, x.rad)

    @classmethod
    def from_strs(cls, re: str, im: str, prec: int) -> "ComplexBall":
        a = RealBall.from_str(re, prec)
        b = RealBall.from_str(im, prec)
        return cls(a.mid, b.mid, radd(a.rad, b.rad))

    @property
    def real(self) -> RealBall:
        return RealBall(self.re, self.rad)

    @property
    def imag(self) -> RealBall:
        return RealBall(self.im, self.rad)

    def mid_abs_upper(self) -> MPF:
        return radd(up(self.re), up(self.im))

    def abs_upper(self) -> MPF:
        """Upper bound on |x| over the ball (|re|+|im|+rad)."""
        return radd(up(self.re), up(self.im), self.rad)

    def abs_lower(self) -> MPF:
        """Lower bound on |x| over the ball, clamped at 0."""
        m2 = mpf_add(mpf_mul(self.re, self.re), mpf_mul(self.im, self.im), RAD, round_floor)
        return lower_sub(mpf_sqrt(m2, RAD, round_floor), self.rad)

    def contains_zero(self) -> bool:
        return self.abs_lower() == fzero

    def contains(self, re: MPF, im: MPF = fzero) -> bool:
        dre, dim = mpf_sub(re, self.re), mpf_sub(im, self.im)
        d2 = mpf_add(mpf_mul(dre, dre), mpf_mul(dim, dim), RAD, round_floor)
        return mpf_le(d2, mpf_mul(self.rad, self.rad, RAD, round_ceiling))

    def overlaps(self, other: "ComplexBall") -> bool:
        dre, dim = mpf_sub(self.re, other.re), mpf_sub(self.im, other.im)
        d2 = mpf_add(mpf_mul(dre, dre), mpf_mul(dim, dim), RAD, round_floor)
        r = radd(self.rad, other.rad)
        return mpf_le(d2, mpf_mul(r, r, RAD, round_ceiling))

    def is_exact(self) -> bool:
        return self.rad == fzero

    def is_finite(self) -> bool:
        return self.rad != finf

    def is_real(self) -> bool:
        """Imaginary part of the ball may be zero."""
        return mpf_le(up(self.im), self.rad)

    def conj(self) -> "ComplexBall":
        return ComplexBall(self.re, mpf_neg(self.im), self.rad)

    def __complex__(self) -> complex:
        return complex(to_float(self.re), to_float(self.im))

    def __repr__(self) -> str:
        return f"ComplexBall({complex(self)!r} +/- {to_float(self.rad):.3g})"


ZERO = ComplexBall()
ONE = ComplexBall(fone)
I = ComplexBall(fzero, fone)


def add_error(x: ComplexBall, err: MPF) -> ComplexBall:
    return ComplexBall(x.re, x.im, radd(x.rad, err))


def ball_round(x: ComplexBall, prec) -> ComplexBall:
    p = bits(prec)
    re, e1 = _round(x.re, p)
    im, e2 = _round(x.im, p)
    return ComplexBall(re, im, radd(x.rad, e1, e2))


def ball_neg(a: ComplexBall) -> ComplexBall:
    return ComplexBall(mpf_neg(a.re), mpf_neg(a.im), a.rad)


def ball_add(a: ComplexBall, b: ComplexBall, prec) -> ComplexBall:
    p = bits(prec)
    re, e1 = _sum((a.re, b.re), p)
    im, e2 = _sum((a.im, b.im), p)
    return ComplexBall(re, im, radd(a.rad, b.rad, e1, e2))


def ball_sub(a: ComplexBall, b: ComplexBall, prec) -> ComplexBall:
    return ball_add(a, ball_neg(b), prec)


def ball_sum(xs: Iterable[ComplexBall], prec) -> ComplexBall:
    xs = list(xs)
    if not xs:
        return ZERO
    p = bits(prec)
    re, e1 = _sum([x.re for x in xs], p)
    im, e2 = _sum([x.im for x in xs], p)
    return ComplexBall(re, im, radd(e1, e2, *[x.rad for x in xs]))


def ball_mul(a: ComplexBall, b: ComplexBall, prec) -> ComplexBall:
    """Product; exact midpoint products, one rounding per component."""
    p = bits(prec)
    re, e1 = _sum((mpf_mul(a.re, b.re), mpf_neg(mpf_mul(a.im, b.im))), p)
    im, e2 = _sum((mpf_mul(a.re, b.im), mpf_mul(a.im, b.re)), p)
    rad = radd(e1, e2)
    if a.rad != fzero or b.rad != fzero:
        rad = radd(rad, rmul(a.mid_abs_upper(), b.rad), rmul(b.mid_abs_upper(), a.rad), rmul(a.rad, b.rad))
    return ComplexBall(re, im, rad)


def ball_sqr(a: ComplexBall, prec) -> ComplexBall:
    return ball_mul(a, a, prec)


def ball_mul_real(a: ComplexBall, b: RealBall, prec) -> ComplexBall:
    p = bits(prec)
    re, e1 = _round(mpf_mul(a.re, b.mid), p)
    im, e2 = _round(mpf_mul(a.im, b.mid), p)
    rad = radd(e1, e2, rmul(a.mid_abs_upper(), b.rad), rmul(up(b.mid), a.rad), rmul(a.rad, b.rad))
    return ComplexBall(re, im, rad)


def ball_mul_int(a: ComplexBall, n: int, prec) -> ComplexBall:
    return ball_mul_real(a, RealBall.from_int(n), prec)


def ball_mul_2exp(a: ComplexBall, k: int) -> ComplexBall:
    return ComplexBall(mpf_shift(a.re, k), mpf_shift(a.im, k), mpf_shift(a.rad, k))


def ball_mul_i(a: ComplexBall, k: int = 1) -> ComplexBall:
    """Exact multiplication by i^k."""
    k %= 4
    if k == 0:
        return a
    if k == 1:
        return ComplexBall(mpf_neg(a.im), a.re, a.rad)
    if k == 2:
        return ball_neg(a)
    return ComplexBall(a.im, mpf_neg(a.re), a.rad)


def ball_dot(xs: Sequence[ComplexBall], ys: Sequence[ComplexBall], prec) -> ComplexBall:
    """Sum of termwise products with a single rounding per component."""
    p = bits(prec)
    res, ims, rads = [], [], []
    for a, b in zip(xs, ys):
        res.append(mpf_mul(a.re, b.re))
        res.append(mpf_neg(mpf_mul(a.im, b.im)))
        ims.append(mpf_mul(a.re, b.im))
        ims.append(mpf_mul(a.im, b.re))
        if a.rad != fzero or b.rad != fzero:
            rads.append(radd(rmul(a.mid_abs_upper(), b.rad), rmul(b.mid_abs_upper(), a.rad), rmul(a.rad, b.rad)))
    re, e1 = _sum(res, p)
    im, e2 = _sum(ims, p)
    return ComplexBall(re, im, radd(e1, e2, *rads))


def ball_inv(b: ComplexBall, prec) -> ComplexBall:
    p = bits(prec)
    if b.re == fzero and b.im == fzero:
        raise DivisionByZeroBall("inverse of a ball containing zero")
    m2 = mpf_add(mpf_mul(b.re, b.re), mpf_mul(b.im, b.im), p + 10, round_nearest)
    re = mpf_div(b.re, m2, p, round_nearest)
    im = mpf_neg(mpf_div(b.im, m2, p, round_nearest))
    out = ComplexBall(re, im)
    err = rel(out.mid_abs_upper(), p - 2)
    if b.rad == fzero:
        return ComplexBall(re, im, err)
    m2lo = mpf_add(mpf_mul(b.re, b.re), mpf_mul(b.im, b.im), RAD, round_floor)
    mlo = mpf_sqrt(m2lo, RAD, round_floor)
    gap = lower_sub(mlo, b.rad)
    if gap == fzero:
        raise DivisionByZeroBall("inverse of a ball containing zero")
    prop = rdiv(b.rad, mpf_mul(mlo, gap, RAD, round_floor))
    return ComplexBall(re, im, radd(err, prop))


def ball_div(a: ComplexBall, b: ComplexBall, prec) -> ComplexBall:
    p = bits(prec)
    return ball_mul(a, ball_inv(b, p + 4), p)


def pow_int(x: ComplexBall, n: int, prec) -> ComplexBall:
    """x^n by square-and-multiply; negative n inverts first."""
    p = bits(prec)
    if n < 0:
        if x.contains_zero():
            raise DivisionByZeroBall("negative power of a ball containing zero")
        return pow_int(ball_inv(x, p + 4), -n, p)
    result = ONE
    base = x
    while n:
        if n & 1:
            result = ball_mul(result, base, p)
        n >>= 1
        if n:
            base = ball_sqr(base, p)
    return result


def _exact_quarter(x: ComplexBall) -> int | None:
    """k if x is exactly k/2 for an integer k, else None."""
    if x.rad != fzero or x.im != fzero:
        return None
    t = mpf_shift(x.re, 1)
    if mpf_floor(t) != t:
        return None
    return to_int(t)


def exp_pi_i(x: ComplexBall, prec) -> ComplexBall:
    """e(x) = exp(pi i x)."""
    p = bits(prec)
    k = _exact_quarter(x)
    if k is not None:
        return ball_mul_i(ONE, k)
    re, im = mpc_expjpi((x.re, x.im), p + GUARD, round_nearest)
    re, e1 = _round(re, p)
    im, e2 = _round(im, p)
    mag = radd(up(re), up(im))
    rad = radd(e1, e2, rel(mag, p + GUARD - 4))
    if x.rad != fzero:
        rad = radd(rad, rmul(radd(mag, rel(mag, p - 2)), expm1_up(rmul(PI_UP, x.rad))))
    return ComplexBall(re, im, rad)


def ball_exp(x: ComplexBall, prec) -> ComplexBall:
    p = bits(prec)
    if x.re == fzero and x.im == fzero and x.rad == fzero:
        return ONE
    re, im = mpc_exp((x.re, x.im), p + GUARD, round_nearest)
    re, e1 = _round(re, p)
    im, e2 = _round(im, p)
    mag = radd(up(re), up(im))
    rad = radd(e1, e2, rel(mag, p + GUARD - 4))
    if x.rad != fzero:
        rad = radd(rad, rmul(radd(mag, rel(mag, p - 2)), expm1_up(x.rad)))
    return ComplexBall(re, im, rad)


def ball_sqrt(x: ComplexBall, prec) -> ComplexBall:
    """Principal square root. The ball must avoid the branch cut for a tight result."""
    p = bits(prec)
    if x.re == fzero and x.im == fzero and x.rad == fzero:
        return ZERO
    lo = x.abs_lower()
    if lo == fzero:
        s = mpf_sqrt(x.abs_upper(), RAD, round_ceiling)
        return ComplexBall(fzero, fzero, s)
    re, im = mpc_sqrt((x.re, x.im), p + GUARD, round_nearest)
    cut = mpf_lt(x.re, fzero) and mpf_le(up(x.im), x.rad)
    if cut:
        # ball meets the negative real axis: both branches are possible
        s = mpf_sqrt(x.abs_upper(), RAD, round_ceiling)
        return ComplexBall(fzero, fzero, s)
    return _sqrt_ball(re, im, x, lo, p)


def _sqrt_ball(re: MPF, im: MPF, x: ComplexBall, lo: MPF, p: int) -> ComplexBall:
    re, e1 = _round(re, p)
    im, e2 = _round(im, p)
    mag = radd(up(re), up(im))
    rad = radd(e1, e2, rel(mag, p + GUARD - 4))
    if x.rad != fzero:
        # |y - s| <= r/|s| on the branch through s, valid while 0 is outside the ball
        rad = radd(rad, rdiv(x.rad, mpf_sqrt(mpf_add(lo, x.rad, RAD, round_floor), RAD, round_floor)))
    return ComplexBall(re, im, rad)


def sqrt_with_hint(x: ComplexBall, hint: ComplexBall, prec) -> ComplexBall:
    """The square root of x whose ball overlaps hint."""
    p = bits(prec)
    if hint.contains_zero():
        raise AmbiguousRoot("hint contains zero")
    if x.re == fzero and x.im == fzero and x.rad == fzero:
        return ZERO
    lo = x.abs_lower()
    if lo == fzero:
        raise AmbiguousRoot("radicand ball contains zero")
    re, im = mpc_sqrt((x.re, x.im), p + GUARD, round_nearest)
    s = _sqrt_ball(re, im, x, lo, p)
    hits = [c for c in (s, ball_neg(s)) if c.overlaps(hint)]
    if len(hits) != 1:
        raise AmbiguousRoot(f"{len(hits)} square root candidates overlap the hint")
    return hits[0]


def mag_log2(x: MPF) -> int:
    """floor(log2 |x|) for x != 0, a large negative number for x = 0."""
    if x == fzero:
        return -(1 << 30)
    if x == finf:
        return 1 << 30
    sign, man, exp, bc = x
    return exp + bc - 1


def finite_radius_below(x: ComplexBall, k: int) -> bool:
    """rad(x) <= 2^-k."""
    return x.rad != finf and mpf_le(x.rad, mpf_shift(fone, -k))


def pi_ball(prec) -> ComplexBall:
    return ComplexBall.from_real(real_pi(prec))


def to_mpc(x: ComplexBall):
    """Midpoint as an mpmath mpc at the current mp precision."""
    from mpmath import mp
    return mp.mpc(mp.make_mpf(x.re), mp.make_mpf(x.im))


def from_mpc(z, prec: int) -> ComplexBall:
    """Exact ball from an mpmath number, rounded to prec bits (no error term)."""
    from mpmath import mp
    z = mp.mpc(z)
    return ComplexBall(mpf_pos(z.real._mpf_, prec, round_nearest), mpf_pos(z.imag._mpf_, prec, round_nearest))

