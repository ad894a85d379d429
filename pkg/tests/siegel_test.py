import os
import random
import sys

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

import numpy as np

from Utilities import random_reduced_tau, random_reduced_z
from siegel.context import SiegelContext, act, reduce_z, v_norm_inf, zero_vector
from siegel.reduction import is_siegel_reduced, siegel_reduce, siegel_reduce_word
from siegel.symplectic import (
    EmbeddedJ, J, SymplecticMatrix, decompose, embed_symplectic, inverse_word, max_word_length,
    random_symplectic, recompose,
)
from arith.matrix import int_matrix
from oracle import ball_matrix, balls


def float_matrix(tau) -> np.ndarray:
    return np.array([[complex(x) for x in row] for row in tau])


def test_reduced_inputs_stay_put():
    rng = np.random.default_rng(1)
    for _ in range(5):
        tau = random_reduced_tau(1, rng)
        assert is_siegel_reduced(tau)
        assert siegel_reduce(tau).is_identity()
    tau = ball_matrix([[1j, 0], [0, 1j]])
    assert is_siegel_reduced(tau)
    assert siegel_reduce(tau).is_identity()


def test_reduce_upper_half_plane():
    tau = ball_matrix([[0.1 + 0.2j]])
    sigma = siegel_reduce(tau)
    assert sigma.is_symplectic()
    _, tau2 = act(sigma, zero_vector(1), tau, 128)
    t = complex(tau2[0][0])
    assert abs(t.real) <= 0.5 + 1e-9
    assert abs(t) >= 1 - 1e-9
    assert is_siegel_reduced(tau2)


def test_reduce_after_random_symplectic():
    rng = np.random.default_rng(2)
    for g in (2, 3):
        tau = random_reduced_tau(g, rng)
        s = random_symplectic(g, 4, random.Random(g))
        _, tau0 = act(s, zero_vector(g), tau, 256)
        sigma, word = siegel_reduce_word(tau0, prec=128)
        assert recompose(word, g) == sigma
        _, tau2 = act(sigma, zero_vector(g), tau0, 256)
        assert is_siegel_reduced(tau2)
        assert np.linalg.eigvalsh(float_matrix(tau2).imag).min() > 0


def test_act_is_an_action():
    rng = np.random.default_rng(3)
    g = 2
    tau = random_reduced_tau(g, rng)
    z = random_reduced_z(tau, rng)
    s1 = random_symplectic(g, 3, random.Random(10))
    s2 = random_symplectic(g, 3, random.Random(11))
    z1, t1 = act(s2, z, tau, 256)
    z12, t12 = act(s1, z1, t1, 256)
    w, t = act(s1 @ s2, z, tau, 256)
    assert np.allclose(float_matrix(t12), float_matrix(t))
    assert np.allclose([complex(x) for x in z12], [complex(x) for x in w])


def test_decompose_recomposes():
    r = random.Random(5)
    for g in (1, 2, 3):
        for _ in range(20):
            s = random_symplectic(g, 6, r)
            word = decompose(s)
            assert recompose(word, g) == s
            assert recompose(inverse_word(word), g) == s.inverse()


def test_decompose_length_bound():
    r = random.Random(0)
    for g in (2, 3, 4):
        for _ in range(100):
            s = random_symplectic(g, 8, r)
            word = decompose(s)
            assert recompose(word, g) == s
            assert len(word) <= max_word_length(g), (g, len(word))


def test_decompose_invertible_gamma_and_delta():
    # gamma = 3I and delta = 2I: neither block is singular
    m = SymplecticMatrix(int_matrix([[2, 1], [3, 2]]))
    s = embed_symplectic(m, (0,), 2) @ embed_symplectic(m, (1,), 2)
    word = decompose(s)
    assert recompose(word, 2) == s
    assert len(word) <= max_word_length(2)
    s3 = s
    for g in (3, 4):
        s3 = embed_symplectic(s3, tuple(range(g - 1)), g) @ embed_symplectic(m, (g - 1,), g)
        word = decompose(s3)
        assert recompose(word, g) == s3
        assert len(word) <= max_word_length(g)


def test_decompose_j():
    for g in (1, 2, 3, 4):
        word = decompose(J(g))
        assert len(word) <= max_word_length(g)
        assert recompose(word, g) == J(g)
        assert isinstance(word[0], EmbeddedJ)


def test_symplectic_identity():
    for g in (1, 2, 3):
        s = random_symplectic(g, 5, random.Random(g))
        assert s.is_symplectic()
        assert (s @ s.inverse()).is_identity()
        assert (J(g) @ J(g) @ J(g) @ J(g)).is_identity()
        assert not (J(g) @ J(g)).is_identity()


def test_reduce_z():
    tau = ball_matrix([[0.2 + 1.1j, 0.1 + 0.3j], [0.1 + 0.3j, -0.3 + 1.4j]])
    z = balls([0.4 + 5.3j, -0.1 - 7.9j])
    ctx = SiegelContext.create(z, tau, 128)
    assert v_norm_inf(ctx) > 1
    z2, w, _ = reduce_z(ctx)
    assert all(x % 2 == 0 for x in w)
    assert v_norm_inf(ctx.with_z(z2)) <= 1


if __name__ == '__main__':
    test_reduced_inputs_stay_put()
    test_reduce_upper_half_plane()
    test_reduce_after_random_symplectic()
    test_act_is_an_action()
    test_decompose_recomposes()
    test_decompose_length_bound()
    test_decompose_invertible_gamma_and_delta()
    test_decompose_j()
    test_symplectic_identity()
    test_reduce_z()
    print("ok")
