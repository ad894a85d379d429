"""
Small dense matrices over balls and over the integers.

Ball matrices are lists of rows of ComplexBall (or RealBall for the real
helpers); integer matrices are numpy object arrays holding Python ints so that
entries never overflow.
"""

from fractions import Fraction
from typing import Sequence, TypeAlias

import numpy as np
from numpy.typing import NDArray
from mpmath.libmp import fzero, mpf_sub, mpf_lt, mpf_le

from arith.ball import (
    ComplexBall, RealBall, ZERO, ONE, MPF,
    ball_add, ball_sub, ball_mul, ball_dot, ball_inv, ball_neg, ball_sum,
    real_sum, real_mul, real_sub, real_div, real_sqrt, real_neg, real_pi,
    radd, up, bits,
)
from errors import DivisionByZeroBall, NotPositiveDefinite

BallMatrix: TypeAlias = list[list[ComplexBall]]
BallVector: TypeAlias = list[ComplexBall]
RealMatrix: TypeAlias = list[list[RealBall]]
RealVector: TypeAlias = list[RealBall]
IntMatrix: TypeAlias = NDArray


# --- integer matrices ---

def int_matrix(rows) -> IntMatrix:
    return np.array([[int(x) for x in row] for row in rows], dtype=object).reshape(len(rows), -1)


def int_identity(n: int) -> IntMatrix:
    m = np.zeros((n, n), dtype=object)
    for i in range(n):
        m[i, i] = 1
    return m


def int_zeros(n: int, k: int | None = None) -> IntMatrix:
    m = np.empty((n, n if k is None else k), dtype=object)
    m.fill(0)
    return m


def int_equal(a: IntMatrix, b: IntMatrix) -> bool:
    return a.shape == b.shape and all(int(x) == int(y) for x, y in zip(a.flat, b.flat))


def int_is_zero(a: IntMatrix) -> bool:
    return all(int(x) == 0 for x in a.flat)


def frac_inverse(a: IntMatrix) -> list[list[Fraction]]:
    """Exact inverse over the rationals by Gauss-Jordan."""
    n = a.shape[0]
    m = [[Fraction(int(a[i, j])) for j in range(n)] + [Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col] != 0), None)
        if piv is None:
            raise ZeroDivisionError("singular integer matrix")
        m[col], m[piv] = m[piv], m[col]
        p = m[col][col]
        m[col] = [x / p for x in m[col]]
        for r in range(n):
            if r != col and m[r][col] != 0:
                f = m[r][col]
                m[r] = [x - f * y for x, y in zip(m[r], m[col])]
    return [row[n:] for row in m]


def int_inverse(a: IntMatrix) -> IntMatrix:
    """Inverse of a unimodular matrix."""
    inv = frac_inverse(a)
    if any(x.denominator != 1 for row in inv for x in row):
        raise ValueError("matrix is not unimodular")
    return int_matrix([[int(x) for x in row] for row in inv])


def int_det(a: IntMatrix) -> int:
    """Determinant by fraction-free (Bareiss) elimination."""
    n = a.shape[0]
    if n == 0:
        return 1
    m = [[int(a[i, j]) for j in range(n)] for i in range(n)]
    sign, prev = 1, 1
    for k in range(n - 1):
        if m[k][k] == 0:
            piv = next((r for r in range(k + 1, n) if m[r][k] != 0), None)
            if piv is None:
                return 0
            m[k], m[piv] = m[piv], m[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) // prev
        prev = m[k][k]
    return sign * m[n - 1][n - 1]


def int_rank(a: IntMatrix) -> int:
    rows = [[Fraction(int(x)) for x in row] for row in a]
    rank, ncols = 0, a.shape[1]
    for col in range(ncols):
        piv = next((r for r in range(rank, len(rows)) if rows[r][col] != 0), None)
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        for r in range(rank + 1, len(rows)):
            f = rows[r][col] / rows[rank][col]
            rows[r] = [x - f * y for x, y in zip(rows[r], rows[rank])]
        rank += 1
    return rank


def is_symmetric(a: IntMatrix) -> bool:
    return int_equal(a, a.T)


def max_abs(a: IntMatrix) -> int:
    return max((abs(int(x)) for x in a.flat), default=0)


# --- complex ball matrices ---

def from_int_matrix(a: IntMatrix) -> BallMatrix:
    return [[ComplexBall.from_int(int(x)) for x in row] for row in a]


def identity(n: int) -> BallMatrix:
    return [[ONE if i == j else ZERO for j in range(n)] for i in range(n)]


def transpose(a: Sequence[Sequence]) -> list[list]:
    return [list(col) for col in zip(*a)]


def cmat_add(a: BallMatrix, b: BallMatrix, prec) -> BallMatrix:
    return [[ball_add(x, y, prec) for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def cmat_sub(a: BallMatrix, b: BallMatrix, prec) -> BallMatrix:
    return [[ball_sub(x, y, prec) for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def cmat_mul(a: BallMatrix, b: BallMatrix, prec) -> BallMatrix:
    bt = transpose(b)
    return [[ball_dot(row, col, prec) for col in bt] for row in a]


def cmat_vec(a: BallMatrix, x: BallVector, prec) -> BallVector:
    return [ball_dot(row, x, prec) for row in a]


def vec_dot(x: BallVector, y: BallVector, prec) -> ComplexBall:
    return ball_dot(x, y, prec)


def int_cmat_mul(m: IntMatrix, a: BallMatrix, prec) -> BallMatrix:
    """Integer matrix times ball matrix."""
    return cmat_mul(from_int_matrix(m), a, prec)


def cmat_int_add(a: BallMatrix, m: IntMatrix, prec) -> BallMatrix:
    return cmat_add(a, from_int_matrix(m), prec)


def symmetrize(a: BallMatrix) -> BallMatrix:
    """Exactly symmetric matrix whose entries contain both a_ij and a_ji."""
    n = len(a)
    out = [row[:] for row in a]
    for i in range(n):
        for j in range(i + 1, n):
            x, y = a[i][j], a[j][i]
            if x == y:
                continue
            d = radd(up(mpf_sub(x.re, y.re)), up(mpf_sub(x.im, y.im)))
            m = ComplexBall(x.re, x.im, radd(x.rad if mpf_le(y.rad, x.rad) else y.rad, d))
            out[i][j] = out[j][i] = m
    return out


def _pivot(col: list[ComplexBall]) -> int:
    best, best_mag = 0, fzero
    for i, x in enumerate(col):
        mag = x.mid_abs_upper()
        if mpf_lt(best_mag, mag):
            best, best_mag = i, mag
    return best


def cmat_solve(a: BallMatrix, b: BallMatrix, prec) -> BallMatrix:
    """X with aX = b by Gaussian elimination with partial pivoting on midpoints."""
    p = bits(prec)
    n = len(a)
    m = [ra[:] + rb[:] for ra, rb in zip(a, b)]
    for col in range(n):
        piv = col + _pivot([m[r][col] for r in range(col, n)])
        m[col], m[piv] = m[piv], m[col]
        if m[col][col].contains_zero():
            raise DivisionByZeroBall("singular ball matrix")
        inv = ball_inv(m[col][col], p)
        m[col] = [ball_mul(x, inv, p) for x in m[col]]
        for r in range(n):
            if r != col:
                f = m[r][col]
                m[r] = [ball_sub(x, ball_mul(f, y, p), p) for x, y in zip(m[r], m[col])]
    return [row[n:] for row in m]


def cmat_inv(a: BallMatrix, prec) -> BallMatrix:
    return cmat_solve(a, identity(len(a)), prec)


def cmat_det(a: BallMatrix, prec) -> ComplexBall:
    """Determinant by elimination; a pivot containing zero falls back to cofactor expansion."""
    p = bits(prec)
    n = len(a)
    if n <= 3:
        return _det_expand(a, p)
    m = [row[:] for row in a]
    det = ONE
    for col in range(n):
        piv = col + _pivot([m[r][col] for r in range(col, n)])
        if piv != col:
            m[col], m[piv] = m[piv], m[col]
            det = ball_neg(det)
        if m[col][col].contains_zero():
            return _det_expand(a, p)
        det = ball_mul(det, m[col][col], p)
        inv = ball_inv(m[col][col], p)
        for r in range(col + 1, n):
            f = ball_mul(m[r][col], inv, p)
            m[r] = [ball_sub(x, ball_mul(f, y, p), p) for x, y in zip(m[r], m[col])]
    return det


def _det_expand(a: BallMatrix, p: int) -> ComplexBall:
    n = len(a)
    if n == 0:
        return ONE
    if n == 1:
        return a[0][0]
    terms = []
    for j in range(n):
        minor = [row[:j] + row[j + 1:] for row in a[1:]]
        t = ball_mul(a[0][j], _det_expand(minor, p), p)
        terms.append(t if j % 2 == 0 else ball_neg(t))
    return ball_sum(terms, p)


def real_part(a: BallMatrix) -> RealMatrix:
    return [[x.real for x in row] for row in a]


def imag_part(a: BallMatrix) -> RealMatrix:
    return [[x.imag for x in row] for row in a]


# --- real ball matrices ---

def rmat_vec(a: RealMatrix, x: RealVector, prec) -> RealVector:
    return [real_sum((real_mul(u, v, prec) for u, v in zip(row, x)), prec) for row in a]


def rvec_dot(x: RealVector, y: RealVector, prec) -> RealBall:
    return real_sum((real_mul(u, v, prec) for u, v in zip(x, y)), prec)


def cholesky(y: RealMatrix, prec) -> RealMatrix:
    """Upper triangular C with positive diagonal and C^T C = pi Y."""
    p = bits(prec)
    n = len(y)
    pi = real_pi(p + 4)
    a = [[real_mul(pi, y[i][j], p + 4) for j in range(n)] for i in range(n)]
    c = [[RealBall() for _ in range(n)] for _ in range(n)]
    for i in range(n):
        s = real_sub(a[i][i], real_sum((real_mul(c[k][i], c[k][i], p) for k in range(i)), p), p)
        if not s.is_positive():
            raise NotPositiveDefinite(f"pivot {i} of the Cholesky decomposition is not positive")
        c[i][i] = real_sqrt(s, p)
        for j in range(i + 1, n):
            t = real_sub(a[i][j], real_sum((real_mul(c[k][i], c[k][j], p) for k in range(i)), p), p)
            c[i][j] = real_div(t, c[i][i], p)
    return c


def upper_solve(c: RealMatrix, b: RealVector, prec) -> RealVector:
    """x with Cx = b for upper triangular C."""
    n = len(c)
    x: RealVector = [RealBall()] * n
    for i in reversed(range(n)):
        s = real_sub(b[i], real_sum((real_mul(c[i][k], x[k], prec) for k in range(i + 1, n)), prec), prec)
        x[i] = real_div(s, c[i][i], prec)
    return x


def lower_solve_t(c: RealMatrix, b: RealVector, prec) -> RealVector:
    """x with C^T x = b for upper triangular C."""
    n = len(c)
    x: RealVector = [RealBall()] * n
    for i in range(n):
        s = real_sub(b[i], real_sum((real_mul(c[k][i], x[k], prec) for k in range(i)), prec), prec)
        x[i] = real_div(s, c[i][i], prec)
    return x


def upper_inverse(c: RealMatrix, prec) -> RealMatrix:
    n = len(c)
    cols = [upper_solve(c, [RealBall.from_int(int(i == j)) for i in range(n)], prec) for j in range(n)]
    return transpose(cols)


def rmat_inf_norm(a: RealMatrix) -> MPF:
    """Upper bound on the max row sum of |a_ij|."""
    best = fzero
    for row in a:
        s = radd(*[x.abs_upper() for x in row])
        if mpf_lt(best, s):
            best = s
    return best


def rvec_neg(x: RealVector) -> RealVector:
    return [real_neg(u) for u in x]
