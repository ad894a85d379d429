"""
A point (z, τ) of C^g x H_g with the quantities every algorithm reads from it:
y = Im z, Y = Im τ, the Cholesky factor C of πY, v = -Y^{-1} y and
u = π yᵀY^{-1}y = ‖Cv‖².
"""

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray
from mpmath.libmp import fzero, to_float, mpf_add, mpf_shift, mpf_floor, to_int, from_float

import config
from arith.ball import (
    ComplexBall, RealBall, ZERO, MPF,
    ball_add, ball_mul_int, ball_sum, exp_pi_i, real_mul, real_pi,
    real_sum, real_neg, real_sqr, bits,
)
from arith.matrix import (
    BallMatrix, BallVector, RealMatrix, RealVector,
    imag_part, cholesky, lower_solve_t, upper_solve, transpose, symmetrize,
    cmat_mul, cmat_inv, cmat_vec, cmat_add, from_int_matrix, cmat_det,
)
from errors import DivisionByZeroBall, SingularCocycle
from siegel.symplectic import SymplecticMatrix

logger = config.get_logger("siegel")


@dataclass(frozen=True)
class SiegelContext:
    z: BallVector
    tau: BallMatrix
    prec: int
    y: RealVector = field(repr=False)
    Y: RealMatrix = field(repr=False)
    C: RealMatrix = field(repr=False)
    v: RealVector = field(repr=False)
    u: RealBall = field(repr=False)
    tau_f: NDArray = field(repr=False)
    C_f: NDArray = field(repr=False)
    v_f: NDArray = field(repr=False)

    @classmethod
    def create(cls, z: BallVector, tau: BallMatrix, prec) -> "SiegelContext":
        p = bits(prec)
        tau = symmetrize(tau)
        Y = imag_part(tau)
        C = cholesky(Y, p + 8)
        return cls._with(z, tau, p, Y, C)

    @classmethod
    def _with(cls, z, tau, p, Y, C) -> "SiegelContext":
        y = [x.imag for x in z]
        w = lower_solve_t(C, y, p + 8)
        pi = real_pi(p + 8)
        v = [real_neg(real_mul(pi, x, p + 8)) for x in upper_solve(C, w, p + 8)]
        u = real_mul(real_mul(pi, pi, p + 8), real_sum((real_sqr(x, p + 8) for x in w), p + 8), p + 8)
        tau_f = np.array([[complex(x) for x in row] for row in tau], dtype=np.complex128)
        C_f = np.array([[float(x) for x in row] for row in C], dtype=np.float64)
        v_f = np.array([float(x) for x in v], dtype=np.float64)
        return cls(list(z), tau, p, y, Y, C, v, u, tau_f, C_f, v_f)

    @property
    def g(self) -> int:
        return len(self.tau)

    @property
    def c(self) -> list[RealBall]:
        return [self.C[j][j] for j in range(self.g)]

    def with_z(self, z: BallVector) -> "SiegelContext":
        """Same τ (and Cholesky factor), new z."""
        return SiegelContext._with(z, self.tau, self.prec, self.Y, self.C)

    def with_prec(self, prec) -> "SiegelContext":
        return SiegelContext.create(self.z, self.tau, prec)

    def is_real_z(self) -> bool:
        return all(x.im == fzero and x.rad == fzero for x in self.z)


def zero_vector(g: int) -> BallVector:
    return [ZERO] * g


def cocycle(sigma: SymplecticMatrix, tau: BallMatrix, prec) -> BallMatrix:
    """γτ + δ."""
    return cmat_add(cmat_mul(from_int_matrix(sigma.gamma), tau, prec), from_int_matrix(sigma.delta), prec)


def act(sigma: SymplecticMatrix, z: BallVector, tau: BallMatrix, prec) -> tuple[BallVector, BallMatrix]:
    """σ·(z, τ) = ((γτ+δ)^{-T} z, (ατ+β)(γτ+δ)^{-1})."""
    p = bits(prec)
    m = cocycle(sigma, tau, p)
    n = cmat_add(cmat_mul(from_int_matrix(sigma.alpha), tau, p), from_int_matrix(sigma.beta), p)
    try:
        minv = cmat_inv(m, p)
    except DivisionByZeroBall as e:
        raise SingularCocycle(f"det(γτ+δ) cannot be certified nonzero: {e}") from e
    tau2 = symmetrize(cmat_mul(n, minv, p))
    z2 = cmat_vec(transpose(minv), z, p)
    return z2, tau2


def cocycle_det(sigma: SymplecticMatrix, tau: BallMatrix, prec) -> ComplexBall:
    return cmat_det(cocycle(sigma, tau, prec), prec)


def _round_even(x: MPF) -> int:
    """Nearest even integer to x."""
    return 2 * to_int(mpf_floor(mpf_add(mpf_shift(x, -1), from_float(0.5))))


def reduce_z(ctx: SiegelContext) -> tuple[BallVector, list[int], ComplexBall]:
    """Translate z by τw, w even, so that ‖v - w‖_∞ <= 1.

    Returns (z + τw, w, e(wᵀτw + 2wᵀz)); θ_{a,b}(z,τ) = cofactor · θ_{a,b}(z + τw, τ).
    """
    p = ctx.prec
    w = [_round_even(x.mid) for x in ctx.v]
    if not any(w):
        return list(ctx.z), w, ComplexBall.from_int(1)
    g = ctx.g
    tw = [ball_sum((ball_mul_int(ctx.tau[i][j], w[j], p) for j in range(g)), p) for i in range(g)]
    z2 = [ball_add(ctx.z[i], tw[i], p) for i in range(g)]
    q = ball_sum([ball_mul_int(tw[i], w[i], p) for i in range(g)]
                 + [ball_mul_int(ctx.z[i], 2 * w[i], p) for i in range(g)], p)
    logger.debug("z reduced by even vector %s", w)
    return z2, w, exp_pi_i(q, p)


def tilde_phase(ctx: SiegelContext, w: list[int]) -> ComplexBall:
    """e(wᵀXw + 2wᵀx): θ̃(z,τ) = phase · θ̃(z + τw, τ) for even w."""
    p = ctx.prec
    g = ctx.g
    re = [ComplexBall.from_real(x.real) for x in ctx.z]
    xw = [ball_sum((ball_mul_int(ComplexBall.from_real(ctx.tau[i][j].real), w[j], p) for j in range(g)), p)
          for i in range(g)]
    q = ball_sum([ball_mul_int(xw[i], w[i], p) for i in range(g)]
                 + [ball_mul_int(re[i], 2 * w[i], p) for i in range(g)], p)
    return exp_pi_i(q, p)


def v_norm_inf(ctx: SiegelContext) -> float:
    return max((abs(to_float(x.mid)) for x in ctx.v), default=0.0)
