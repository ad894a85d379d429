"""
Siegel reduction of τ: alternate LLL reduction of Im τ, integer translation of
Re τ, and the best improving matrix of the boundary list, until no matrix of
the list raises det Im τ by more than the tolerance.
"""

from mpmath import mp, mpf, nint

import config
from arith.ball import ComplexBall, bits, ball_round
from arith.matrix import (
    BallMatrix, IntMatrix, int_identity, int_zeros, int_equal, symmetrize,
    cmat_mul, cmat_int_add, from_int_matrix,
)
from errors import ToleranceExceeded, SingularCocycle, DivisionByZeroBall
from siegel.context import act, cocycle_det
from siegel.symplectic import ElementaryMatrix, SymplecticMatrix, Diag, Trig, decompose, sigma_g_list

logger = config.get_logger("siegel")

MAX_ROUNDS = 1000


def _gso(gram: list[list[mpf]]) -> tuple[list[list[mpf]], list[mpf]]:
    """Gram-Schmidt coefficients mu and squared norms b from a Gram matrix."""
    n = len(gram)
    mu = [[mpf(0)] * n for _ in range(n)]
    b = [mpf(0)] * n
    for i in range(n):
        for j in range(i):
            s = gram[i][j] - sum(mu[j][k] * mu[i][k] * b[k] for k in range(j))
            mu[i][j] = s / b[j]
        b[i] = gram[i][i] - sum(mu[i][k] ** 2 * b[k] for k in range(i))
    return mu, b


def _gram(g0: list[list[mpf]], u: IntMatrix) -> list[list[mpf]]:
    n = len(g0)
    um = [[mpf(int(x)) for x in row] for row in u]
    tmp = [[sum(um[i][k] * g0[k][j] for k in range(n)) for j in range(n)] for i in range(n)]
    return [[sum(tmp[i][k] * um[j][k] for k in range(n)) for j in range(n)] for i in range(n)]


def lll_gram(gram: list[list[mpf]], delta: float = config.LLL_DELTA) -> IntMatrix:
    """Unimodular U such that U·gram·Uᵀ is LLL-reduced (rows of U are the new basis)."""
    n = len(gram)
    u = int_identity(n)
    if n == 1:
        return u
    g = [row[:] for row in gram]
    k = 1
    while k < n:
        for j in reversed(range(k)):
            mu, _ = _gso(g)
            q = int(nint(mu[k][j]))
            if abs(mu[k][j]) > 0.5 and q:
                u[k] = u[k] - q * u[j]
                g = _gram(gram, u)
        mu, b = _gso(g)
        if b[k] >= (delta - mu[k][k - 1] ** 2) * b[k - 1]:
            k += 1
        else:
            u[[k - 1, k]] = u[[k, k - 1]]
            g = _gram(gram, u)
            k = max(k - 1, 1)
    return u


def _imag_mid(tau: BallMatrix) -> list[list[mpf]]:
    return [[mp.make_mpf(x.im) for x in row] for row in tau]


def _check_radii(tau: BallMatrix, tol: float):
    lim = tol / 16
    for row in tau:
        for x in row:
            if float(mp.make_mpf(x.rad)) > lim:
                raise ToleranceExceeded(f"entry radius {float(mp.make_mpf(x.rad)):.3g} exceeds {lim:.3g}")


def _translation(tau: BallMatrix, tol: float) -> IntMatrix:
    g = len(tau)
    s = int_zeros(g)
    for i in range(g):
        for j in range(i, g):
            x = mp.make_mpf(tau[i][j].re)
            if abs(x) > 0.5 + tol / 4:
                s[i, j] = s[j, i] = -int(nint(x))
    return s


def _best_boundary(sigmas, tau: BallMatrix, p: int, tol: float):
    best, best_abs = None, None
    for s in sigmas:
        try:
            d = cocycle_det(s, tau, p)
        except DivisionByZeroBall:
            raise ToleranceExceeded("cocycle determinant not computable at this precision")
        if float(mp.make_mpf(d.rad)) > tol / 16:
            raise ToleranceExceeded("cocycle determinant too wide for the tolerance")
        a = abs(complex(d))
        if best_abs is None or a < best_abs:
            best, best_abs = s, a
    return best, best_abs


_boundary_words: dict[SymplecticMatrix, list[ElementaryMatrix]] = {}


def _boundary_word(sigma: SymplecticMatrix) -> list[ElementaryMatrix]:
    if sigma not in _boundary_words:
        _boundary_words[sigma] = decompose(sigma)
    return _boundary_words[sigma]


def _reduce_at(tau: BallMatrix, tol: float, p: int) -> tuple[SymplecticMatrix, list[ElementaryMatrix]]:
    g = len(tau)
    sigmas = sigma_g_list(g)
    sigma = SymplecticMatrix.identity(g)
    word: list[ElementaryMatrix] = []
    cur = symmetrize([[ball_round(x, p) for x in row] for row in tau])
    with mp.workprec(p):
        for rounds in range(MAX_ROUNDS):
            _check_radii(cur, tol)
            u = lll_gram(_imag_mid(cur))
            if not int_equal(u, int_identity(g)):
                sigma = Diag(u).matrix() @ sigma
                word.insert(0, Diag(u))
                cur = symmetrize(cmat_mul(cmat_mul(from_int_matrix(u), cur, p), from_int_matrix(u.T), p))
            s = _translation(cur, tol)
            if any(x != 0 for x in s.flat):
                sigma = Trig(s).matrix() @ sigma
                word.insert(0, Trig(s))
                cur = cmat_int_add(cur, s, p)
            best, best_abs = _best_boundary(sigmas, cur, p, tol)
            if best_abs >= 1 - tol / 4:
                logger.debug("reduction converged after %d rounds at %d bits", rounds, p)
                return sigma, word
            sigma = best @ sigma
            word[0:0] = _boundary_word(best)
            try:
                _, cur = act(best, [ComplexBall()] * g, cur, p)
            except SingularCocycle as e:
                raise ToleranceExceeded(str(e)) from e
    raise ToleranceExceeded(f"no convergence in {MAX_ROUNDS} rounds")


def siegel_reduce_word(tau: BallMatrix, tol: float = config.REDUCTION_TOL,
                       prec=None) -> tuple[SymplecticMatrix, list[ElementaryMatrix]]:
    """σ such that σ·τ is reduced up to tol, with an elementary word multiplying to σ.

    Works at 64 bits first and doubles the working precision when a decision
    cannot be made, up to REDUCTION_MAX_FACTOR times the target precision.
    """
    target = bits(prec) if prec is not None else config.DEFAULT_PREC
    p = config.REDUCTION_START_PREC
    cap = config.REDUCTION_MAX_FACTOR * max(target, p)
    while True:
        try:
            return _reduce_at(tau, tol, p)
        except ToleranceExceeded as e:
            if 2 * p > cap:
                raise
            logger.debug("reduction at %d bits failed (%s), retrying", p, e)
            p *= 2


def siegel_reduce(tau: BallMatrix, tol: float = config.REDUCTION_TOL, prec=None) -> SymplecticMatrix:
    return siegel_reduce_word(tau, tol, prec)[0]


def is_siegel_reduced(tau: BallMatrix, tol: float = config.REDUCTION_TOL, prec=None) -> bool:
    """Reduced with tolerance: |Re τ| <= 1/2 + tol, LLL-reduced Im τ, no improving boundary matrix."""
    p = bits(prec) if prec is not None else config.DEFAULT_PREC
    g = len(tau)
    with mp.workprec(p):
        for row in tau:
            for x in row:
                if abs(mp.make_mpf(x.re)) > 0.5 + tol:
                    return False
        mu, b = _gso(_imag_mid(tau))
        for k in range(1, g):
            if any(abs(mu[k][j]) > 0.5 + tol for j in range(k)):
                return False
            if b[k] < (config.LLL_DELTA - tol - mu[k][k - 1] ** 2) * b[k - 1]:
                return False
        for s in sigma_g_list(g):
            try:
                d = cocycle_det(s, tau, p)
            except DivisionByZeroBall:
                return False
            if abs(complex(d)) < 1 - tol:
                return False
    return True
