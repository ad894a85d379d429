import os
import sys

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

from mpmath import mp, mpf

from deriv import dft, jet_all, jet_bounds, plan_jets, tau_derivatives
from arith.ball import ComplexBall, ball_mul
from engines.Base import ThetaJet, all_chars, multi_indices
from engines.Summation import sum_jets
from errors import MissingOrder
from siegel.context import SiegelContext
from oracle import ball_matrix, balls, close, jacobi

N = 64


def context(z, tau, prec=N + 32):
    return SiegelContext.create(balls(z), ball_matrix(tau), prec)


def test_jet_bounds_at_i():
    gamma, rho = jet_bounds(context([0], [[1j]]), 0)
    with mp.workprec(64):
        assert abs(rho - 1 / mp.sqrt(2 * mp.pi)) < mpf(10) ** -9
        gamma0 = (1 + mp.sqrt(8 / mp.pi)) * (1 + mp.sqrt(2))
        assert gamma >= gamma0 * mp.exp(mpf(0.5))
        assert gamma <= gamma0 * mp.exp(mpf(0.5)) * (1 + mpf(10) ** -9)


def test_rho_grows_with_order():
    ctx = context([0.1 + 0.05j], [[0.2 + 1.1j]])
    rhos = [jet_bounds(ctx, B)[1] for B in range(4)]
    assert all(x <= y for x, y in zip(rhos, rhos[1:]))
    assert all(0 < x <= 1 for x in rhos)


def test_plan_step():
    ctx = context([0.1], [[1j]])
    plan = plan_jets(ctx, N, 2)
    assert plan.eps <= plan.rho
    assert plan.work_prec > N
    with mp.workprec(64):
        assert plan.eta((0,)) <= mpf(2) ** -N


def test_dft_of_monomial():
    # f(x) = x^2 sampled at the cube roots of unity: only ν = 2 survives
    ctx = context([0], [[1j]])
    plan = plan_jets(ctx, N, 2)
    roots = plan.roots()
    vals = {(k,): ball_mul(roots[k], roots[k], 128) for k in range(3)}
    s = dft(vals, roots, 1, 128)
    assert s[(0,)].contains_zero()
    assert s[(1,)].contains_zero()
    assert s[(2,)].overlaps(ComplexBall.from_int(3))


def test_jets_match_termwise_derivatives():
    tau, z = 1j, 0.3 + 0.1j
    ctx = context([z], [[tau]])
    jet = jet_all(ctx, N, 2)
    ref = sum_jets(ctx, N + 16, 2)
    for ch in all_chars(1):
        for nu in multi_indices(1, 2):
            assert jet.values[ch][nu].overlaps(ref.values[ch][nu])
    with mp.workprec(N + 64):
        q = mp.expjpi(mp.mpc(tau))
        x = mp.pi * mp.mpc(z)
        assert close(jet.values[(0, 0)][(1,)], mp.pi * mp.jtheta(3, x, q, 1), N)
        assert close(jet.values[(0, 1)][(2,)], mp.pi ** 2 * mp.jtheta(4, x, q, 2), N)


def test_jets_dimension_two():
    tau = [[0.1 + 1.1j, 0.3 + 0.2j], [0.3 + 0.2j, -0.2 + 1.2j]]
    ctx = context([0.1 + 0.1j, -0.2], tau)
    jet = jet_all(ctx, N, 1)
    ref = sum_jets(ctx, N + 16, 1)
    for ch in all_chars(2):
        for nu in multi_indices(2, 1):
            assert jet.values[ch][nu].overlaps(ref.values[ch][nu])


def test_order_zero_is_plain_theta():
    tau, z = 0.4 + 1.0j, 0.2 + 0.3j
    jet = jet_all(context([z], [[tau]]), N, 0)
    assert jet.order == 0
    with mp.workprec(N + 64):
        for a, b in all_chars(1):
            assert close(jet.values[(a, b)][(0,)], jacobi(a, b, z, tau), N - 8)


def test_tau_derivatives_need_order_two():
    jet = ThetaJet(1, 1, {(0, 0): {(0,): ComplexBall.from_int(1), (1,): ComplexBall()}}, prec=N)
    try:
        tau_derivatives(jet)
    except MissingOrder:
        pass
    else:
        assert False


def test_heat_equation():
    tau, z = 0.1 + 1.05j, 0.25 + 0.1j
    jet = jet_all(context([z], [[tau]]), N, 2)
    dt = tau_derivatives(jet)
    with mp.workprec(N + 64):
        f = lambda t: mp.jtheta(3, mp.pi * mp.mpc(z), mp.expjpi(t))
        ref = mp.diff(f, mp.mpc(tau))
        x = dt[(0, 0)][(0, 0)]
        assert abs(mp.mpc(mp.make_mpf(x.re), mp.make_mpf(x.im)) - ref) < mpf(2) ** -(N - 16)


if __name__ == '__main__':
    test_jet_bounds_at_i()
    test_rho_grows_with_order()
    test_plan_step()
    test_dft_of_monomial()
    test_jets_match_termwise_derivatives()
    test_jets_dimension_two()
    test_order_zero_is_plain_theta()
    test_tau_derivatives_need_order_two()
    test_heat_equation()
    print("ok")
