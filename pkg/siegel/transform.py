"""
The theta transformation formula.

For σ in Sp_2g(Z) and a lift (σ, f) with f² = det(γτ+δ),

    θ_t(σ·(z,τ)) = e(zᵀ(γτ+δ)⁻¹γz) · f(τ) · ζ8^{k_t} · θ_{s_t}(z,τ)

where t ↦ (s_t, k_t) is the character action of the lift. Lifts are fixed
per elementary matrix: a constant f for Diag and Trig, the branch of
√det(-τ) with ζ8^r f(iY) > 0 for embedded J_r, and words of those for an
embedded SL_2 matrix. Character actions of Diag and Trig are computed in
closed form; those of embedded J are found once by matching theta values at
a random point.
"""

import random
import threading
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from mpmath import mp, mpc, mpf
from mpmath.libmp import from_float

import config
from arith.ball import (
    ComplexBall, ONE, ZERO, add_error, ball_dot, ball_mul, ball_mul_i, ball_neg,
    bits, exp_pi_i, from_mpc, rel, sqrt_with_hint, to_mpc,
)
from arith.matrix import BallMatrix, BallVector, cmat_det, cmat_inv, cmat_vec, from_int_matrix, int_det, int_inverse, int_matrix
from errors import AmbiguousRoot, DecompositionError, DivisionByZeroBall, PathThroughRoot, SingularCocycle, ThetaError
from engines.Base import ThetaValues, char_bits, char_index, char_key, to_plain, to_tilde
from siegel.context import SiegelContext, act, cocycle
from siegel.symplectic import (
    Diag, ElementaryMatrix, EmbeddedJ, Trig, SymplecticMatrix, _embed_word, decompose,
)

logger = config.get_logger("transform")

_EIGHTH = ComplexBall(from_float(0.25))


def zeta8_mul(x: ComplexBall, k: int, prec) -> ComplexBall:
    """x·ζ8^k; exact for even k."""
    k %= 8
    y = ball_mul_i(x, k // 2)
    if k % 2:
        y = ball_mul(y, exp_pi_i(_EIGHTH, bits(prec) + 4), prec)
    return y


# --- character actions ---

@dataclass(frozen=True)
class CharAction:
    """θ_t(σ·x) ∝ ζ8^{eighths[t]} θ_{source[t]}(x) for every characteristic index t."""
    g: int
    source: tuple[int, ...]
    eighths: tuple[int, ...]

    @classmethod
    def identity(cls, g: int) -> "CharAction":
        n = 1 << (2 * g)
        return cls(g, tuple(range(n)), (0,) * n)

    def compose(self, other: "CharAction") -> "CharAction":
        """Action of σ1σ2, with self the action of σ1 and other that of σ2."""
        src = tuple(other.source[s] for s in self.source)
        k = tuple((self.eighths[t] + other.eighths[s]) % 8 for t, s in enumerate(self.source))
        return CharAction(self.g, src, k)

    def is_bijection(self) -> bool:
        return sorted(self.source) == list(range(1 << (2 * self.g)))


def _dot(x, y) -> int:
    return sum(int(a) * int(b) for a, b in zip(x, y))


def _split(t: int, g: int) -> tuple[list[int], list[int]]:
    a, b = char_key(t, g)
    return char_bits(a, g), char_bits(b, g)


def _join(a: Sequence[int], b: Sequence[int]) -> int:
    return (char_index(a) << len(a)) | char_index(b)


def diag_action(u) -> CharAction:
    """θ_{a,b}(Uz, UτUᵀ) = (-1)^{āᵀk} θ_{ā,b̄}(z,τ) where Uᵀa = ā + 2k' and U⁻¹b = b̄ + 2k."""
    g = u.shape[0]
    uinv = int_inverse(u)
    f_eighths = 0 if int_det(u) == 1 else 2
    src, ks = [], []
    for t in range(1 << (2 * g)):
        a, b = _split(t, g)
        ua = [_dot(u[:, i], a) for i in range(g)]
        ub = [_dot(uinv[i, :], b) for i in range(g)]
        abar = [x % 2 for x in ua]
        bbar = [x % 2 for x in ub]
        k2 = [(x - y) // 2 for x, y in zip(ub, bbar)]
        src.append(_join(abar, bbar))
        ks.append((4 * _dot(abar, k2) - f_eighths) % 8)
    return CharAction(g, tuple(src), tuple(ks))


def trig_action(s) -> CharAction:
    """θ_{a,b}(z, τ+S) = e(aᵀSa/4 - aᵀc/2 + aᵀk) θ_{a,b̄}(z,τ) where c = diag(S) + Sa and b + c = b̄ + 2k."""
    g = s.shape[0]
    src, ks = [], []
    for t in range(1 << (2 * g)):
        a, b = _split(t, g)
        sa = [_dot(s[i, :], a) for i in range(g)]
        c = [int(s[i, i]) + sa[i] for i in range(g)]
        bc = [x + y for x, y in zip(b, c)]
        bbar = [x % 2 for x in bc]
        k2 = [(x - y) // 2 for x, y in zip(bc, bbar)]
        src.append(_join(a, bbar))
        ks.append((_dot(a, sa) - 2 * _dot(a, c) + 4 * _dot(a, k2)) % 8)
    return CharAction(g, tuple(src), tuple(ks))


def embedded_j_expected(indices: Sequence[int], g: int) -> CharAction:
    """Closed form for embedded J_r: swap a_i and b_i on the block, k = r + 2Σ a_i b_i."""
    r = len(indices)
    src, ks = [], []
    for t in range(1 << (2 * g)):
        a, b = _split(t, g)
        a2, b2 = a[:], b[:]
        for i in indices:
            a2[i], b2[i] = b[i], a[i]
        src.append(_join(a2, b2))
        ks.append((r + 2 * sum(a[i] * b[i] for i in indices)) % 8)
    return CharAction(g, tuple(src), tuple(ks))


# --- lifts ---

@dataclass(frozen=True, eq=False)
class ElementaryLift:
    """An elementary matrix with a fixed square root f of its cocycle determinant."""
    matrix: ElementaryMatrix
    f_eighths: int = 0

    def eval_f(self, tau: BallMatrix, prec) -> ComplexBall:
        if isinstance(self.matrix, EmbeddedJ):
            idx = self.matrix.indices
            return eval_f_jg([[tau[i][j] for j in idx] for i in idx], prec)
        return zeta8_mul(ONE, self.f_eighths, prec)


@dataclass(frozen=True, eq=False)
class MetaplecticLift:
    factors: tuple[ElementaryLift, ...]
    action: CharAction
    product: SymplecticMatrix

    def eval_f(self, tau: BallMatrix, prec) -> ComplexBall:
        """f_{σ1σ2}(τ) = f1(σ2τ)·f2(τ), walking from the rightmost factor."""
        p = bits(prec)
        zero = [ZERO] * len(tau)
        f, cur = ONE, tau
        n = len(self.factors)
        for i, lift in enumerate(reversed(self.factors)):
            f = ball_mul(f, lift.eval_f(cur, p), p)
            if i + 1 < n:
                _, cur = act(lift.matrix.matrix(), zero, cur, p)
        return f


def sl2_word(a: int, b: int, c: int, d: int) -> list[ElementaryMatrix]:
    """Diag(±1), Trig and J_1 factors (all g = 1) multiplying to [[a, b], [c, d]]."""
    right: list[ElementaryMatrix] = []
    while c != 0:
        k = -((2 * d + abs(c)) // (2 * abs(c))) * (1 if c > 0 else -1)
        b, d = a * k + b, c * k + d
        right[0:0] = [Trig(int_matrix([[-k]]))]
        a, b, c, d = -b, a, -d, c
        right[0:0] = [Diag(int_matrix([[-1]])), EmbeddedJ((0,), 1)]
    # [[a, b], [0, a]] with a = ±1
    return [Diag(int_matrix([[a]])), Trig(int_matrix([[a * b]]))] + right


_cache: dict[tuple, MetaplecticLift] = {}
_cache_lock = threading.Lock()


def _cache_key(e: ElementaryMatrix) -> tuple:
    return type(e).__name__, e.g, tuple(int(x) for x in e.matrix().m.flat)


def lift_elementary(e: ElementaryMatrix) -> tuple[MetaplecticLift, CharAction]:
    key = _cache_key(e)
    with _cache_lock:
        hit = _cache.get(key)
    if hit is not None:
        return hit, hit.action
    if isinstance(e, Diag):
        lift = MetaplecticLift((ElementaryLift(e, 0 if int_det(e.u) == 1 else 2),), diag_action(e.u), e.matrix())
    elif isinstance(e, Trig):
        lift = MetaplecticLift((ElementaryLift(e),), trig_action(e.s), e.matrix())
    elif isinstance(e, EmbeddedJ):
        single = ElementaryLift(e)
        action = match_action(e, single)
        expected = embedded_j_expected(e.indices, e.g)
        if action.source[0] != 0 or action.eighths[0] != expected.eighths[0]:
            raise ThetaError(f"character action of {e} disagrees with θ_00(0, J·τ) = ζ8^r f(τ) θ_00(0,τ)")
        if action != expected:
            logger.warning("matched action of %s differs from the closed form", e)
        lift = MetaplecticLift((single,), action, e.matrix())
    else:
        inner = compose_lifts([lift_elementary(x) for x in _embed_word(sl2_word(e.a, e.b, e.c, e.d), e.g)])
        lift = MetaplecticLift(inner.factors, inner.action, e.matrix())
    with _cache_lock:
        lift = _cache.setdefault(key, lift)
    return lift, lift.action


def compose_lifts(lifts: Sequence) -> MetaplecticLift:
    """Product of lifts left to right; accepts lifts or (lift, action) pairs."""
    lifts = [x[0] if isinstance(x, tuple) else x for x in lifts]
    if not lifts:
        raise ValueError("empty lift list")
    g = lifts[0].product.g
    factors: tuple[ElementaryLift, ...] = ()
    action = CharAction.identity(g)
    product = SymplecticMatrix.identity(g)
    for lift in lifts:
        factors += lift.factors
        action = action.compose(lift.action)
        product = product @ lift.product
    return MetaplecticLift(factors, action, product)


def lift_word(word: Sequence[ElementaryMatrix]) -> MetaplecticLift:
    return compose_lifts([lift_elementary(e) for e in word])


# --- the cocycle square root for J_g ---

_Y_SCALES = (1.7, 2.3, 0.6, 3.1, 1.3, 0.45, 4.7, 0.85)


def _jg_hint(tau: BallMatrix, scale: float, wp: int) -> mpc:
    """ζ8^{-g}√det Y · Q(1)/Q(-1) along τ_t = iY + (t+1)/2 (τ - iY), Y = scale·diag(Im τ)."""
    g = len(tau)
    with mp.workprec(wp):
        t = mp.matrix([[to_mpc(x) for x in row] for row in tau])
        y = [scale * mp.im(t[j, j]) for j in range(g)]
        iy = mp.matrix(g, g)
        for j in range(g):
            iy[j, j] = mpc(0, y[j])
        try:
            b = (iy - t) ** -1 * (iy + t)
        except ZeroDivisionError:
            raise PathThroughRoot("τ - iY is singular")
        lam = [b[0, 0]] if g == 1 else list(mp.eig(b, left=False, right=False))
        eps = mpf(2) ** (-wp // 4)
        for x in lam:
            if abs(mp.im(x)) < eps and -1 - eps <= mp.re(x) <= 1 + eps:
                raise PathThroughRoot(f"root {mp.nstr(x, 8)} on the path")

        def q(s):
            out = mpc(1)
            for x in lam:
                out *= mp.sqrt(s - x) if mp.re(x) <= 0.01 else mp.sqrt(x - s)
            return out

        return mp.expjpi(mpf(-g) / 4) * mp.sqrt(mp.fprod(y)) * q(1) / q(-1)


def eval_f_jg(tau: BallMatrix, prec) -> ComplexBall:
    """The square root f of det(-τ) on H_g with ζ8^g f(iY) > 0 for real diagonal Y > 0."""
    p = bits(prec)
    g = len(tau)
    d = cmat_det([[ball_neg(x) for x in row] for row in tau], p + 8)
    for scale in _Y_SCALES:
        try:
            h = _jg_hint(tau, scale, 96 + 4 * g)
        except PathThroughRoot as e:
            logger.debug("f(J_%d) path retry: %s", g, e)
            continue
        hint = from_mpc(h, 64)
        hint = add_error(hint, rel(hint.mid_abs_upper(), 10))
        try:
            return sqrt_with_hint(d, hint, p)
        except AmbiguousRoot as e:
            logger.debug("f(J_%d) hint rejected: %s", g, e)
    raise PathThroughRoot(f"no admissible path for the J_{g} cocycle")


# --- numeric matching ---

def _random_point(g: int, rng: random.Random) -> tuple[BallVector, BallMatrix]:
    tau = [[ZERO] * g for _ in range(g)]
    for i in range(g):
        for j in range(i, g):
            re = round(rng.uniform(-0.1, 0.1), 6)
            im = round(rng.uniform(-0.05, 0.05), 6) + (1.0 if i == j else 0.0)
            tau[i][j] = tau[j][i] = ComplexBall.from_complex(complex(re, im))
    z = [ComplexBall.from_complex(complex(round(rng.uniform(-0.2, 0.2), 6), round(rng.uniform(-0.1, 0.1), 6)))
         for _ in range(g)]
    return z, tau


def match_action(e: ElementaryMatrix, lift: ElementaryLift, seed: int = 0) -> CharAction:
    """Character action of one lifted elementary matrix, read off from theta values at a random point."""
    from engines.SumNaive import theta_values_plain
    g = e.g
    n = 1 << (2 * g)
    p = config.MATCH_PREC
    sigma = e.matrix()
    rng = random.Random(seed)
    tol = 2.0 ** -config.MATCH_TOL_BITS
    roots = np.exp(1j * np.pi * np.arange(8) / 4)
    for attempt in range(5):
        z0, tau0 = _random_point(g, rng)
        z1, tau1 = act(sigma, z0, tau0, p + 16)
        v0 = theta_values_plain(z0, tau0, p)
        v1 = theta_values_plain(z1, tau1, p)
        c = complex(factor(sigma, z0, tau0, lift.eval_f(tau0, p + 16), p))
        a0 = np.array([complex(v0.values[char_key(s, g)]) for s in range(n)])
        a1 = np.array([complex(v1.values[char_key(t, g)]) for t in range(n)]) / c
        scale = np.abs(a0).max()
        cand = roots[:, None] * a0[None, :]
        src, ks = [], []
        for t in range(n):
            if abs(a1[t]) < scale * 2.0 ** -20:
                break
            hits = np.argwhere(np.abs(cand - a1[t]) <= tol * scale)
            if len(hits) != 1:
                break
            k, s = hits[0]
            src.append(int(s))
            ks.append(int(k))
        else:
            action = CharAction(g, tuple(src), tuple(ks))
            if action.is_bijection():
                logger.debug("matched character action of %s on attempt %d", e, attempt)
                return action
        logger.debug("matching attempt %d for %s rejected", attempt, e)
    raise ThetaError(f"could not determine the character action of {e}")


# --- applying the formula ---

def factor(sigma: SymplecticMatrix, z: BallVector, tau: BallMatrix, f: ComplexBall, prec) -> ComplexBall:
    """e(zᵀ(γτ+δ)⁻¹γz)·f."""
    p = bits(prec)
    if all(x == ZERO for x in z) or all(int(x) == 0 for x in sigma.gamma.flat):
        return f
    try:
        minv = cmat_inv(cocycle(sigma, tau, p + 8), p + 8)
    except DivisionByZeroBall as e:
        raise SingularCocycle(str(e)) from e
    q = cmat_vec(minv, cmat_vec(from_int_matrix(sigma.gamma), z, p + 8), p + 8)
    return ball_mul(exp_pi_i(ball_dot(z, q, p + 8), p + 4), f, p)


def sigma_lift(sigma: SymplecticMatrix, word: Sequence[ElementaryMatrix] | None = None) -> MetaplecticLift:
    if word is None:
        word = decompose(sigma)
    lift = lift_word(word)
    if lift.product != sigma:
        raise DecompositionError("elementary word does not multiply to the matrix")
    return lift


def transform_values(sigma: SymplecticMatrix, z: BallVector, tau: BallMatrix, values: ThetaValues,
                     prec, word: Sequence[ElementaryMatrix] | None = None) -> ThetaValues:
    """Theta values at σ·(z,τ) from values at (z,τ); normalized input gives normalized output.

    Characteristics missing from `values` are dropped from the output.
    """
    p = bits(prec)
    g = sigma.g
    if sigma.is_identity():
        return values
    lift = sigma_lift(sigma, word)
    plain = to_plain(values, SiegelContext.create(z, tau, p + 8), p + 8) if values.tilde else values
    c = factor(sigma, z, tau, lift.eval_f(tau, p + 16), p + 8)
    out = {}
    for t in range(1 << (2 * g)):
        x = plain.values.get(char_key(lift.action.source[t], g))
        if x is not None:
            out[char_key(t, g)] = zeta8_mul(ball_mul(c, x, p + 8), lift.action.eighths[t], p + 8)
    res = ThetaValues(g, out, tilde=False, prec=p)
    if values.tilde:
        z2, tau2 = act(sigma, z, tau, p + 16)
        res = to_tilde(res, SiegelContext.create(z2, tau2, p + 8), p)
    return res
