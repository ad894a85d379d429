"""
Partial derivatives of theta functions by finite differences.

θ is evaluated at the (B+1)^g points z + h_n, h_n = (ε ζ^{n_1}, ..., ε ζ^{n_g})
with ζ a primitive (B+1)st root of unity; a discrete Fourier transform over n
recovers the Taylor coefficients, and a Cauchy bound on the polydisk of radius ρ
around z certifies the aliased tail.
"""

from dataclasses import dataclass
from functools import partial
from math import ceil, factorial, log2
from multiprocessing import Pool

from mpmath import mp, mpf

import config
from arith.ball import (
    ComplexBall, RealBall, add_error, ball_add, ball_div, ball_mul, ball_mul_2exp, ball_mul_i, ball_mul_int, ball_sum, bits,
    exp_pi_i, pi_ball,
)
from arith.matrix import upper_inverse
from engines.Base import Char, ThetaJet, iter_points, multi_indices, to_plain
from engines.QuasiLinear import ql_all, ql_at
from errors import MissingOrder
from geometry.bounds import BOUND_PREC, cholesky_factor
from geometry.distance import distances

logger = config.get_logger("deriv")

DFT_GUARD = 32


def _up(x: mpf) -> mpf:
    return x * (1 + mpf(2) ** -40)


def jet_bounds(ctx, B: int) -> tuple[mpf, mpf]:
    """(γ, ρ) with |θ_{a,b}(x,τ)| <= γ whenever ‖x - z‖_∞ <= ρ.

    γ = γ₀ exp((γ₁ + γ₂ρ)²) with γ₀ = (1 + √(8/π)) 2^{g-1} ∏(1 + √(2π)/c_j),
    γ₁ = √(π yᵀY⁻¹y) and γ₂ bounding √(π xᵀY⁻¹x) on the unit cube; ρ minimizes
    exp((γ₁ + γ₂ρ)²)/ρ^{2B+1} subject to ρ <= 1.
    """
    if B < 0:
        raise ValueError("order must be nonnegative")
    g = ctx.g
    # πY = CᵀC, so π xᵀY⁻¹x = π²‖C⁻ᵀx‖²; rows of C⁻ᵀ are the columns of C⁻¹
    inv = upper_inverse(ctx.C, ctx.prec)
    with mp.workprec(BOUND_PREC):
        gamma0 = _up((1 + mp.sqrt(8 / mp.pi)) * mpf(2) ** (g - 1) * cholesky_factor(ctx.c))
        gamma1 = _up(mp.sqrt(mp.make_mpf(ctx.u.upper())))
        rows = [sum(mp.make_mpf(inv[i][j].abs_upper()) for i in range(g)) for j in range(g)]
        gamma2 = _up(mp.pi * mp.sqrt(sum(r * r for r in rows)))
        rho = (-gamma1 + mp.sqrt(gamma1 ** 2 + 2 * (2 * B + 1))) / (2 * gamma2)
        rho = min(mpf(1), rho)
        gamma = _up(gamma0 * mp.exp((gamma1 + gamma2 * rho) ** 2))
    return gamma, rho


@dataclass(frozen=True)
class JetPlan:
    """Parameters of one finite-difference jet: order B, polydisk (γ, ρ), step ε = 2^-eps_exp, working precision."""
    g: int
    B: int
    gamma: mpf
    rho: mpf
    eps_exp: int
    work_prec: int

    @property
    def eps(self) -> mpf:
        return mpf(2) ** -self.eps_exp

    def eta(self, nu: tuple[int, ...]) -> mpf:
        """Tail bound ν! (B+1)^{-g} 2γg ε^{B+1} / ρ^{|ν|+B+1}."""
        B, g = self.B, self.g
        f = 1
        for k in nu:
            f *= factorial(k)
        with mp.workprec(BOUND_PREC):
            x = f * mpf(B + 1) ** -g * 2 * self.gamma * g * self.eps ** (B + 1) / self.rho ** (sum(nu) + B + 1)
            return _up(x)

    def roots(self) -> list[ComplexBall]:
        """Balls containing ζ^k = e(2k/(B+1)), k = 0..B."""
        n = self.B + 1
        p = self.work_prec + 16
        return [exp_pi_i(ball_div(ComplexBall.from_int(2 * k), ComplexBall.from_int(n), p), p) for k in range(n)]

    def offsets(self, roots: list[ComplexBall]) -> list[tuple[tuple[int, ...], list[ComplexBall]]]:
        """(n, h_n) for every n in {0..B}^g."""
        return [(n, [ball_mul_2exp(roots[k], -self.eps_exp) for k in n]) for n in iter_points(self.B + 1, self.g)]


def plan_jets(ctx, N: int, B: int) -> JetPlan:
    """Largest power-of-two ε with ε <= (2g)^{-1/(B+1)}ρ and 2γgB!(B+1)^{-g}ε^{B+1} <= 2^{-N-1}ρ^{2B+1}."""
    g = ctx.g
    gamma, rho = jet_bounds(ctx, B)
    with mp.workprec(BOUND_PREC):
        e1 = mp.log(2 * g, 2) / (B + 1) - mp.log(rho, 2)
        lhs = mp.log(2 * gamma * g * factorial(B), 2) - g * mp.log(B + 1, 2)
        e2 = (lhs + N + 1 - (2 * B + 1) * mp.log(rho, 2)) / (B + 1)
        eps_exp = max(0, int(mp.ceil(max(e1, e2))))
        # values at z + h_n carry exp(π Im(x)ᵀY⁻¹Im(x)) <= γ relative to θ̃
        lost = B * eps_exp + log2(factorial(B)) + float(mp.log(gamma, 2))
    eta0 = JetPlan(g, B, gamma, rho, eps_exp, 0).eta((0,) * g)
    with mp.workprec(BOUND_PREC):
        eta_bits = float(-mp.log(eta0, 2))
    work = N + ceil(max(lost, eta_bits)) + DFT_GUARD
    logger.debug("jet plan: B = %d, rho = %s, log2 gamma = %.3g, eps = 2^-%d, working precision %d",
                 B, mp.nstr(rho, 6), float(mp.log(gamma, 2)), eps_exp, work)
    return JetPlan(g, B, gamma, rho, eps_exp, work)


def _eval_point(ctx, zero: dict, prec: int, h: list[ComplexBall]):
    x = [ball_add(a, b, prec + 16) for a, b in zip(ctx.z, h)]
    cx = ctx.with_z(x)
    return to_plain(ql_at(cx, prec, True, zero), cx, prec + 8)


def _dft_axis(vals: dict[tuple[int, ...], ComplexBall], axis: int, inv_roots: list[ComplexBall],
              prec: int) -> dict[tuple[int, ...], ComplexBall]:
    """Replace the index n_axis by ν_axis: Σ_k ζ^{-ν k} vals[..k..]."""
    n = len(inv_roots)
    out = {}
    for key in vals:
        if key[axis] != 0:
            continue
        for nu in range(n):
            terms = [ball_mul(inv_roots[(nu * k) % n], vals[key[:axis] + (k,) + key[axis + 1:]], prec)
                     for k in range(n)]
            out[key[:axis] + (nu,) + key[axis + 1:]] = ball_sum(terms, prec)
    return out


def dft(vals: dict[tuple[int, ...], ComplexBall], roots: list[ComplexBall], g: int, prec) -> dict:
    """S_ν = Σ_n ζ^{-νᵀn} vals[n], one axis at a time."""
    p = bits(prec)
    n = len(roots)
    inv_roots = [roots[0]] + [roots[n - k] for k in range(1, n)]
    for axis in range(g):
        vals = _dft_axis(vals, axis, inv_roots, p)
    return vals


def jet_all(ctx, N, B: int, processes: int | None = None) -> ThetaJet:
    """∂^ν θ_{a,b}(z,τ) within 2^-N for all (a,b) and |ν| <= B at a reduced point.

    The (B+1)^g evaluations share the distance profile of 0; with processes > 1
    they run in a process pool.
    """
    N = bits(N)
    g = ctx.g
    if B < 0:
        raise ValueError("order must be nonnegative")
    if B == 0:
        values = to_plain(ql_all(ctx, N + 8), ctx, N + 8)
        zero = (0,) * g
        return ThetaJet(g, 0, {ch: {zero: x} for ch, x in values.values.items()}, prec=N)
    plan = plan_jets(ctx, N, B)
    p = plan.work_prec
    ctx = ctx if ctx.prec >= p + 16 else ctx.with_prec(p + 16)
    roots = plan.roots()
    pts = plan.offsets(roots)
    zero_profile = distances(ctx.C, [RealBall()] * g)
    run = partial(_eval_point, ctx, zero_profile, p)
    if processes and processes > 1:
        with Pool(processes=min(processes, len(pts))) as pool:
            results = pool.map(run, [h for _, h in pts])
    else:
        results = [run(h) for _, h in pts]
    chars = results[0].chars()
    nus = multi_indices(g, B)
    den = ComplexBall.from_int((B + 1) ** g)
    out: dict[Char, dict] = {}
    for ch in chars:
        s = dft({n: res[ch] for (n, _), res in zip(pts, results)}, roots, g, p)
        row = {}
        for nu in nus:
            f = 1
            for k in nu:
                f *= factorial(k)
            d = ball_div(ball_mul_int(s[nu], f, p), den, p)
            d = ball_mul_2exp(d, plan.eps_exp * sum(nu))
            row[nu] = add_error(d, plan.eta(nu)._mpf_)
        out[ch] = row
    logger.debug("jets of order %d from %d points at %d bits", B, len(pts), p)
    return ThetaJet(g, B, out, prec=N)


def tau_derivatives(jet: ThetaJet) -> dict[Char, dict[tuple[int, int], ComplexBall]]:
    """∂θ_{a,b}/∂τ_jk (j <= k) from second z-derivatives: divide by 2πi(1 + δ_jk)."""
    if jet.order < 2:
        raise MissingOrder(f"τ-derivatives need second z-derivatives, jet has order {jet.order}")
    g = jet.g
    p = jet.prec + 16
    pi2 = ball_mul_2exp(pi_ball(p), 1)
    out = {}
    for ch, row in jet.values.items():
        d = {}
        for j in range(g):
            for k in range(j, g):
                nu = [0] * g
                nu[j] += 1
                nu[k] += 1
                den = ball_mul_2exp(pi2, 1) if j == k else pi2
                # 1/i = i^3
                d[(j, k)] = ball_mul_i(ball_div(row[tuple(nu)], den, p), 3)
        out[ch] = d
    return out
