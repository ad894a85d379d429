"""High-precision reference values for the tests, computed with mpmath alone."""

import itertools

from mpmath import mp

from arith.ball import ComplexBall


def jacobi(a: int, b: int, z, tau):
    """θ_{a,b}(z,τ) in dimension 1 through mpmath's Jacobi theta functions."""
    q = mp.expjpi(mp.mpc(tau))
    x = mp.pi * mp.mpc(z)
    if (a, b) == (0, 0):
        return mp.jtheta(3, x, q)
    if (a, b) == (0, 1):
        return mp.jtheta(4, x, q)
    if (a, b) == (1, 0):
        return mp.jtheta(2, x, q)
    return -mp.jtheta(1, x, q)


def brute_theta(a_bits, b_bits, z, tau, K: int = 10):
    """Σ e((n+a/2)ᵀτ(n+a/2) + 2(n+a/2)ᵀ(z+b/2)) over the box |n_j| <= K."""
    g = len(z)
    tau = [[mp.mpc(x) for x in row] for row in tau]
    w = [mp.mpc(z[j]) + mp.mpf(b_bits[j]) / 2 for j in range(g)]
    out = mp.mpc(0)
    for n in itertools.product(range(-K, K + 1), repeat=g):
        m = [n[j] + mp.mpf(a_bits[j]) / 2 for j in range(g)]
        q = sum(m[i] * tau[i][j] * m[j] for i in range(g) for j in range(g))
        out += mp.expjpi(q + 2 * sum(m[j] * w[j] for j in range(g)))
    return out


def close(x: ComplexBall, ref, N: int) -> bool:
    """ref lies in x up to 2^-(N+20), and x is tighter than 2^-(N-16)."""
    d = abs(mp.mpc(mp.make_mpf(x.re), mp.make_mpf(x.im)) - mp.mpc(ref))
    r = mp.make_mpf(x.rad)
    return d <= r + mp.mpf(2) ** -(N + 20) and r <= mp.mpf(2) ** -(N - 16)


def balls(z) -> list[ComplexBall]:
    return [ComplexBall.from_complex(complex(x)) for x in z]


def ball_matrix(tau) -> list[list[ComplexBall]]:
    return [[ComplexBall.from_complex(complex(x)) for x in row] for row in tau]
