import os
import random
import sys

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

from arith.ball import mag_log2
from arith.matrix import int_matrix
from engines.Base import all_chars
from engines.SumNaive import theta_values_plain
from siegel.context import act
from siegel.symplectic import Diag, EmbeddedJ, EmbeddedSL2, J, Trig, decompose, random_symplectic, recompose
from siegel.transform import lift_word, transform_values
from oracle import ball_matrix, balls

N = 96
RANDOM_N = 48

TAU1 = ball_matrix([[0.2 + 1.3j]])
Z1 = balls([0.1 + 0.2j])
TAU2 = ball_matrix([[0.1 + 1.1j, 0.2 + 0.3j], [0.2 + 0.3j, -0.2 + 1.2j]])
Z2 = balls([0.15 + 0.1j, -0.1 + 0.05j])
TAU3 = ball_matrix([
    [0.1 + 1.2j, 0.2 + 0.1j, -0.1 + 0.0j],
    [0.2 + 0.1j, -0.2 + 1.3j, 0.1 + 0.2j],
    [-0.1 + 0.0j, 0.1 + 0.2j, 0.3 + 1.4j],
])
Z3 = balls([0.1 + 0.05j, -0.05 + 0.1j, 0.2 - 0.1j])


def check_transform(sigma, z, tau, word=None, n=N):
    g = sigma.g
    values = theta_values_plain(z, tau, n + 32)
    z2, tau2 = act(sigma, z, tau, n + 64)
    direct = theta_values_plain(z2, tau2, n + 32)
    moved = transform_values(sigma, z, tau, values, n + 16, word=word)
    assert not moved.tilde
    for ch in all_chars(g):
        assert moved[ch].overlaps(direct[ch])
        assert mag_log2(moved[ch].rad) < -n + 8 + max(0, mag_log2(direct[ch].abs_upper()))


def test_elementary_dimension_one():
    for e in (Trig(int_matrix([[1]])), Diag(int_matrix([[-1]])), EmbeddedJ((0,), 1), EmbeddedSL2(2, 1, 1, 1, 1)):
        check_transform(e.matrix(), Z1, TAU1)
    check_transform(J(1), Z1, TAU1)


def test_elementary_dimension_two():
    word = [
        Trig(int_matrix([[1, -1], [-1, 0]])),
        Diag(int_matrix([[1, 1], [0, 1]])),
        EmbeddedJ((1,), 2),
        EmbeddedJ((0, 1), 2),
    ]
    for e in word:
        check_transform(e.matrix(), Z2, TAU2)


def test_product_of_elementary_matrices():
    word = [EmbeddedJ((0,), 2), Trig(int_matrix([[1, 0], [0, 1]])), EmbeddedJ((0, 1), 2)]
    sigma = recompose(word, 2)
    check_transform(sigma, Z2, TAU2, word=word)
    check_transform(sigma, Z2, TAU2)


def test_lift_of_word_multiplies_to_matrix():
    r = random.Random(3)
    for g in (1, 2):
        s = random_symplectic(g, 4, r)
        lift = lift_word(decompose(s))
        assert lift.product == s
        assert lift.action.is_bijection()


def test_characteristic_action_is_a_permutation():
    lift = lift_word([EmbeddedJ((0, 1), 2)])
    src = sorted(lift.action.source)
    assert src == list(range(16))
    assert all(0 <= k < 8 for k in lift.action.eighths)


def test_random_symplectic_transformations():
    r = random.Random(17)
    for g, z, tau in ((2, Z2, TAU2), (3, Z3, TAU3)):
        for _ in range(50):
            check_transform(random_symplectic(g, 3, r), z, tau, n=RANDOM_N)


if __name__ == '__main__':
    test_elementary_dimension_one()
    test_elementary_dimension_two()
    test_product_of_elementary_matrices()
    test_lift_of_word_multiplies_to_matrix()
    test_characteristic_action_is_a_permutation()
    test_random_symplectic_transformations()
    print("ok")
