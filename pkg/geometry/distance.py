"""
Distances from a real vector to the lattice Z^g (and its translates Z^g + a/2)
for the norm ‖x‖_τ = ‖Cx‖₂.

Candidates are found in double precision with the nearest-plane start and a
depth-first search of the ellipsoid through it; the minimum is then certified
by recomputing every candidate within a safety slack in ball arithmetic.
"""

from dataclasses import dataclass

import numpy as np
from mpmath.libmp import fzero, to_float, mpf_lt

import config
from arith.ball import RealBall, real_mul, real_mul_2exp, real_sqr, real_sub, real_sum
from arith.matrix import RealMatrix, RealVector
from arith.numba import babai, points_within
from engines.Base import char_bits

logger = config.get_logger("geometry")

DIST_PREC = 64
CANDIDATE_CAP = 1 << 16
SLACK = 2.0 ** -20


def float_matrix(C: RealMatrix) -> np.ndarray:
    return np.array([[to_float(x.mid) for x in row] for row in C], dtype=np.float64)


def float_vector(v: RealVector) -> np.ndarray:
    return np.array([to_float(x.mid) for x in v], dtype=np.float64)


def norm_sq(C: RealMatrix, n, v: RealVector, prec=DIST_PREC) -> RealBall:
    """‖C(n - v)‖² in ball arithmetic; n may hold half-integers given as floats."""
    g = len(C)
    d = [real_sub(RealBall.from_float(float(n[j])), v[j], prec) for j in range(g)]
    rows = [real_sum((real_mul(C[i][j], d[j], prec) for j in range(i, g)), prec) for i in range(g)]
    return real_sum((real_sqr(r, prec) for r in rows), prec)


def dist_sq(C: RealMatrix, v: RealVector, prec=DIST_PREC) -> RealBall:
    """Ball containing min over n in Z^g of ‖C(n - v)‖²."""
    cf, vf = float_matrix(C), float_vector(v)
    n0, r2 = babai(cf, vf)
    bound = r2 * (1 + SLACK) + SLACK
    pts, norms, count = points_within(cf, vf, bound, CANDIDATE_CAP)
    if count <= 0:
        cands = [n0]
    else:
        best = norms[:count].min()
        keep = norms[:count] <= best * (1 + SLACK) + SLACK
        cands = list(pts[:count][keep])
    lo, hi = None, None
    for n in cands:
        x = norm_sq(C, n, v, prec)
        xl, xh = x.lower(), x.upper()
        if lo is None or mpf_lt(xl, lo):
            lo = xl
        if hi is None or mpf_lt(xh, hi):
            hi = xh
    if mpf_lt(lo, fzero):
        lo = fzero
    return RealBall.interval(lo, hi)


def shifted_center(v: RealVector, a: int, g: int) -> RealVector:
    """v - a/2, so that Dist(v, Z^g + a/2) = Dist(v - a/2, Z^g)."""
    bits_a = char_bits(a, g)
    return [real_sub(v[j], RealBall.from_float(bits_a[j] / 2), DIST_PREC) if bits_a[j] else v[j] for j in range(g)]


@dataclass(frozen=True)
class DistanceProfile:
    """Dist(v, Z^g + a/2)² and Dist(0, Z^g + a/2)² for every a, keyed by the index of a."""
    g: int
    v: dict[int, RealBall]
    zero: dict[int, RealBall]

    def scaled(self, j: int) -> "DistanceProfile":
        """Profile at (2^j z, 2^j τ): the same v, all squared distances times 2^j."""
        return DistanceProfile(self.g, {a: real_mul_2exp(x, j) for a, x in self.v.items()},
                               {a: real_mul_2exp(x, j) for a, x in self.zero.items()})

    def v_min(self) -> RealBall:
        return self.v[min(self.v, key=lambda a: to_float(self.v[a].mid))]


def distances(C: RealMatrix, v: RealVector, prec=DIST_PREC) -> dict[int, RealBall]:
    g = len(C)
    return {a: dist_sq(C, shifted_center(v, a, g), prec) for a in range(1 << g)}


def distance_profile(ctx, prec=DIST_PREC, zero: dict[int, RealBall] | None = None) -> DistanceProfile:
    """Profile at ctx; the part at 0 depends on τ only and may be passed in from another z."""
    if zero is None:
        zero = distances(ctx.C, [RealBall()] * ctx.g, prec)
    return DistanceProfile(ctx.g, distances(ctx.C, ctx.v, prec), zero)


def min_norm_sq(C: RealMatrix, prec=DIST_PREC) -> RealBall:
    """ρ² = min over nonzero n of ‖Cn‖², searching up to the shortest column of C."""
    cf = float_matrix(C)
    g = len(C)
    r2 = float(np.min(np.einsum('ij,ij->j', cf, cf))) * (1 + SLACK)
    pts, norms, count = points_within(cf, np.zeros(g), r2, CANDIDATE_CAP)
    best = None
    for k in range(max(count, 0)):
        if norms[k] == 0.0:
            continue
        x = norm_sq(C, pts[k], [RealBall()] * g, prec)
        if best is None or mpf_lt(x.upper(), best.upper()):
            best = x
    return best
