"""
Certified upper bounds on tails of theta series, and the ellipsoid radii
derived from them.

All bounds are evaluated with mpmath at BOUND_PREC bits and inflated by
2^-BOUND_PAD_BITS before being returned as exact balls, so the returned
midpoint is itself an upper bound.
"""

from math import log, sqrt
from typing import Sequence

from mpmath import mp, mpf
from mpmath.libmp import to_float

import config
from arith.ball import RealBall
from arith.matrix import rmat_inf_norm, upper_inverse
from errors import OutOfDomain, PreconditionViolated

logger = config.get_logger("geometry")

BOUND_PREC = 64
BOUND_PAD_BITS = 40
NEWTON_STEPS = 10


def _lower(x) -> mpf:
    if isinstance(x, RealBall):
        return mp.make_mpf(x.lower())
    return mpf(x)


def _upper(x) -> mpf:
    if isinstance(x, RealBall):
        return mp.make_mpf(x.upper())
    return mpf(x)


def _ball(x: mpf) -> RealBall:
    """Exact ball whose midpoint bounds x from above."""
    return RealBall((x * (1 + mpf(2) ** -BOUND_PAD_BITS))._mpf_)


def cholesky_factor(c: Sequence) -> mpf:
    """∏(1 + √(2π)/c_j), using lower bounds on c_j."""
    out = mpf(1)
    for cj in c:
        lo = _lower(cj)
        if lo <= 0:
            raise PreconditionViolated("Cholesky diagonal not certified positive")
        out *= 1 + mp.sqrt(2 * mp.pi) / lo
    return out


def log_b(g: int) -> mpf:
    """log B(g), B(g) = 2^{10(1 + g log g)}."""
    return 10 * (1 + g * mp.log(g)) * mp.log(2)


def tail_bound_new(g: int, c: Sequence, R, p: int = 0, A=0) -> RealBall:
    """(1+√(8/π))·max{2,R}^{g-1}·(A+R²)^{p/2}·exp(-R²)·∏(1+√(2π)/c_j)."""
    with mp.workprec(BOUND_PREC):
        R, A = _upper(R), _upper(A)
        if A + R * R < p:
            raise PreconditionViolated(f"A + R^2 = {float(A + R * R):.4g} < p = {p}")
        out = (1 + mp.sqrt(8 / mp.pi)) * max(mpf(2), R) ** (g - 1) * (A + R * R) ** (mpf(p) / 2)
        out *= mp.exp(-R * R) * cholesky_factor(c)
        return _ball(out)


def old_bound_applies(g: int, rho, R, p: int) -> bool:
    with mp.workprec(BOUND_PREC):
        x = mpf(R) - mpf(rho) / 2
        return x > 0 and x * x > (g + 2 * p + mp.sqrt(g * g + 8 * p)) / 4


def tail_bound_old(g: int, rho, R, p: int = 0) -> RealBall:
    """g·2^{g-1}·ρ^{-g}·Γ((g+p)/2, (R-ρ/2)²) with the upper incomplete Γ."""
    if not old_bound_applies(g, rho, R, p):
        raise OutOfDomain(f"R = {float(R):.4g} too small for the incomplete-Gamma bound (g={g}, p={p})")
    with mp.workprec(BOUND_PREC):
        rho = _lower(rho)
        x = (_lower(R) - rho / 2) ** 2
        gam = mp.gammainc(mpf(g + p) / 2, a=x)
        return _ball(g * mpf(2) ** (g - 1) * rho ** (-g) * gam)


def tail_bound_shifted(g: int, delta, R) -> RealBall:
    """B(g)·max{2,δ}^{g-1}·exp(-R²), for R² = Dist² + δ²."""
    with mp.workprec(BOUND_PREC):
        delta, R = _upper(delta), _lower(R)
        return _ball(mp.exp(log_b(g) - R * R) * max(mpf(2), delta) ** (g - 1))


def _f(p: int, x: float) -> float:
    return x if p == 0 else x - p / 2 * log(x)


def choose_radius(p: int, eps) -> float:
    """R >= 2 with R^p·exp(-R²) <= eps, by Newton's method on f_p(x) = x - (p/2)·log x.

    eps may be an mpf far below the float range.
    """
    with mp.workprec(BOUND_PREC):
        eps = mpf(eps)
        if eps <= 0:
            raise ValueError("eps must be positive")
        L = float(-mp.log(eps))
    x0 = p / 2
    fx0 = _f(p, x0)
    x = max(4.0, float(p), 2 * (L - fx0) + p * log(2))
    while _f(p, x) < L:
        x *= 2
    for _ in range(NEWTON_STEPS):
        d = 1 - p / (2 * x)
        if d <= 0:
            break
        x = max(x - (_f(p, x) - L) / d, x0)
    # float rounding in the last step
    x *= 1 + 2.0 ** -40
    while _f(p, x) < L:
        x *= 2
    return max(2.0, sqrt(x) * (1 + 2.0 ** -40))


def _prod_eps(ctx, n_bits: int) -> mpf:
    return mpf(2) ** -n_bits / ((1 + mp.sqrt(8 / mp.pi)) * cholesky_factor(ctx.c))


def radius_for_sum(ctx, N: int, variant: str = "best", dist=None, shifted: bool = False) -> float:
    """Radius R such that summing θ̃_{0,b} over E(v, R) errs by at most 2^-N.

    Variant A uses the bound with ∏(1+√(2π)/c_j); variant B uses the shifted
    bound and needs dist = Dist(v, Z^g)². With shifted=True the target error is
    2^-N·exp(-dist) instead of 2^-N. Variant "best", the default, takes the
    smaller of the two, and falls back to A when dist is not given.
    """
    g = ctx.g
    if variant == "best":
        if dist is None:
            return radius_for_sum(ctx, N, "A")
        return min(radius_for_sum(ctx, N, "A", dist, shifted), radius_for_sum(ctx, N, "B", dist, shifted))
    with mp.workprec(BOUND_PREC):
        if variant == "A":
            if shifted and dist is not None:
                N += int(float(_upper(dist)) / log(2)) + 1
            R = choose_radius(g - 1, _prod_eps(ctx, N))
        elif variant == "B":
            if dist is None:
                raise ValueError("variant B needs Dist(v, Z^g)^2")
            d_lo, d_hi = _lower(dist), _upper(dist)
            eps = mpf(2) ** -N * mp.exp(-log_b(g))
            if not shifted:
                eps *= mp.exp(d_lo)
            delta = choose_radius(g - 1, eps)
            R = float(mp.sqrt(delta * delta + d_hi)) * (1 + 2.0 ** -40)
        else:
            raise ValueError(f"unknown radius variant {variant!r}")
    logger.debug("radius for %d bits (variant %s): %.6g", N, variant, R)
    return R


def cinv_norm(ctx) -> float:
    """Upper bound on ‖C⁻¹‖_∞."""
    inv = upper_inverse(ctx.C, ctx.prec)
    return float(mp.make_mpf(rmat_inf_norm(inv)))


def v_norm_upper(ctx) -> float:
    return max((to_float(x.abs_upper()) for x in ctx.v), default=0.0) * (1 + 2.0 ** -40)


def radius_for_jets(ctx, N: int, B: int) -> float:
    """Radius R such that every ∂^ν θ_{0,b}, |ν| <= B, is summed to within 2^-N over E(v, R)."""
    if B < 0:
        raise ValueError("order must be nonnegative")
    g = ctx.g
    ci = cinv_norm(ctx)
    vn = v_norm_upper(ctx)
    with mp.workprec(BOUND_PREC):
        u = _upper(ctx.u)
        eps1 = _prod_eps(ctx, N) * mp.exp(-u) * (2 * mp.pi) ** (-B)
        R = choose_radius(g - 1, eps1 * mpf(max(1.0, 2 * vn)) ** (-B))
        if ci * R > vn:
            R = choose_radius(g - 1 + B, eps1 * mpf(max(1.0, 2 * ci)) ** (-B))
            R = max(R, vn / ci)
    R = max(R, sqrt(B) * (1 + 2.0 ** -40))
    logger.debug("jet radius for %d bits, order %d: %.6g", N, B, R)
    return R
