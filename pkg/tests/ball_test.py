import os
import sys

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

from mpmath import mp, mpf

from arith.ball import (
    ComplexBall, RealBall, ball_add, ball_div, ball_exp, ball_inv, ball_mul, ball_mul_i, ball_sqrt, exp_pi_i,
    mag_log2, real_sqrt, sqrt_with_hint, to_mpc,
)
from errors import AmbiguousRoot, DivisionByZeroBall

PREC = 128


def ball(x: complex, rad: float = 0.0) -> ComplexBall:
    b = ComplexBall.from_complex(x)
    return ComplexBall(b.re, b.im, mpf(rad)._mpf_)


def holds(x: ComplexBall, ref) -> bool:
    ref = mp.mpc(ref)
    return x.contains(ref.real._mpf_, ref.imag._mpf_)


def raises(exc, f, *args) -> bool:
    try:
        f(*args)
    except exc:
        return True
    return False


def test_mul_contains_product():
    a = ball(1.25 + 0.5j, 2 ** -30)
    b = ball(-0.75 + 2j, 2 ** -40)
    with mp.workprec(256):
        c = ball_mul(a, b, PREC)
        # corners of both balls
        for da in (2 ** -30, -(2 ** -30), 2 ** -30 * 1j):
            for db in (2 ** -40, -(2 ** -40) * 1j):
                assert holds(c, (mp.mpc(1.25, 0.5) + da) * (mp.mpc(-0.75, 2) + db))


def test_add_and_div():
    a = ball(3 + 4j)
    b = ball(1 - 2j)
    with mp.workprec(256):
        assert holds(ball_add(a, b, PREC), mp.mpc(4, 2))
        assert holds(ball_div(a, b, PREC), mp.mpc(3, 4) / mp.mpc(1, -2))


def test_inv_of_ball_around_zero_raises():
    assert raises(DivisionByZeroBall, ball_inv, ball(2 ** -20, 2 ** -10), PREC)


def test_exp_pi_i_quarter_is_exact():
    for k in range(-4, 5):
        x = exp_pi_i(ComplexBall(mpf(k / 2)._mpf_), PREC)
        assert x.is_exact()
        assert x == ball_mul_i(ComplexBall.from_int(1), k)


def test_exp_pi_i_matches_mpmath():
    x = ball(0.3 + 0.2j, 2 ** -60)
    with mp.workprec(256):
        assert holds(exp_pi_i(x, PREC), mp.expjpi(mp.mpc(0.3, 0.2)))
        assert holds(ball_exp(x, PREC), mp.exp(mp.mpc(0.3, 0.2)))


def test_sqrt_principal_branch():
    with mp.workprec(256):
        s = ball_sqrt(ball(-3 + 4j), PREC)
        assert holds(s, mp.mpc(1, 2))
        r = real_sqrt(RealBall.from_int(2), PREC)
        assert r.contains(mp.sqrt(2)._mpf_)


def test_sqrt_on_branch_cut_is_wide():
    s = ball_sqrt(ball(-1, 2 ** -20), PREC)
    with mp.workprec(256):
        assert holds(s, mp.mpc(0, 1))
        assert holds(s, mp.mpc(0, -1))


def test_sqrt_with_hint_picks_the_branch():
    x = ball(-3 - 4j, 2 ** -50)
    with mp.workprec(256):
        s = sqrt_with_hint(x, ball(-1 + 2j, 0.1), PREC)
        assert holds(s, mp.mpc(-1, 2))
        s = sqrt_with_hint(x, ball(1 - 2j, 0.1), PREC)
        assert holds(s, mp.mpc(1, -2))


def test_sqrt_with_hint_ambiguous():
    assert raises(AmbiguousRoot, sqrt_with_hint, ball(4), ball(0, 1), PREC)
    assert raises(AmbiguousRoot, sqrt_with_hint, ball(4), ball(1j, 0.5), PREC)
    assert raises(AmbiguousRoot, sqrt_with_hint, ball(2 ** -20, 2 ** -10), ball(1), PREC)


def test_radius_is_small_at_precision():
    x = exp_pi_i(ball(0.123456789 + 0.5j), PREC)
    assert mag_log2(x.rad) < -PREC + 8
    with mp.workprec(PREC):
        assert abs(to_mpc(x) - mp.expjpi(mp.mpc(0.123456789, 0.5))) < mpf(2) ** (-PREC + 8)


if __name__ == '__main__':
    test_mul_contains_product()
    test_add_and_div()
    test_inv_of_ball_around_zero_raises()
    test_exp_pi_i_quarter_is_exact()
    test_exp_pi_i_matches_mpmath()
    test_sqrt_principal_branch()
    test_sqrt_on_branch_cut_is_wide()
    test_sqrt_with_hint_picks_the_branch()
    test_sqrt_with_hint_ambiguous()
    test_radius_is_small_at_precision()
    print("ok")
