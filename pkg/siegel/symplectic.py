"""
The symplectic group Sp_2g(Z): matrices, elementary generators, the boundary
list used by Siegel reduction, and decomposition into elementary matrices.

Index sets are 0-based throughout: EmbeddedJ((1,)) in dimension 3 acts on the
second coordinate.
"""

import random
from abc import ABC, abstractmethod
from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

import numpy as np

import config
from arith.matrix import (
    IntMatrix, int_matrix, int_identity, int_zeros, int_equal, int_is_zero,
    int_inverse, int_det, int_rank, is_symmetric,
)
from errors import DecompositionError

logger = config.get_logger("siegel")


@dataclass(frozen=True, eq=False)
class SymplecticMatrix:
    """A 2g x 2g integer matrix with σᵀJσ = J, stored with Python int entries."""
    m: IntMatrix

    @property
    def g(self) -> int:
        return self.m.shape[0] // 2

    @property
    def alpha(self) -> IntMatrix:
        return self.m[:self.g, :self.g]

    @property
    def beta(self) -> IntMatrix:
        return self.m[:self.g, self.g:]

    @property
    def gamma(self) -> IntMatrix:
        return self.m[self.g:, :self.g]

    @property
    def delta(self) -> IntMatrix:
        return self.m[self.g:, self.g:]

    @classmethod
    def from_blocks(cls, alpha, beta, gamma, delta) -> "SymplecticMatrix":
        return cls(np.block([[alpha, beta], [gamma, delta]]).astype(object))

    @classmethod
    def identity(cls, g: int) -> "SymplecticMatrix":
        return cls(int_identity(2 * g))

    def __matmul__(self, other: "SymplecticMatrix") -> "SymplecticMatrix":
        return SymplecticMatrix(self.m @ other.m)

    def __eq__(self, other) -> bool:
        return isinstance(other, SymplecticMatrix) and int_equal(self.m, other.m)

    def __hash__(self) -> int:
        return hash(tuple(int(x) for x in self.m.flat))

    def inverse(self) -> "SymplecticMatrix":
        a, b, c, d = self.alpha, self.beta, self.gamma, self.delta
        return SymplecticMatrix.from_blocks(d.T, -b.T, -c.T, a.T)

    def is_symplectic(self) -> bool:
        j = J(self.g).m
        return int_equal(self.m.T @ j @ self.m, j)

    def is_identity(self) -> bool:
        return int_equal(self.m, int_identity(2 * self.g))

    def __repr__(self) -> str:
        rows = "; ".join(" ".join(str(int(x)) for x in row) for row in self.m)
        return f"SymplecticMatrix([{rows}])"


def J(g: int) -> SymplecticMatrix:
    z, i = int_zeros(g), int_identity(g)
    return SymplecticMatrix.from_blocks(z, i, -i, z)


def embed_symplectic(sigma: SymplecticMatrix, indices: Sequence[int], g: int) -> SymplecticMatrix:
    """Embed a 2r x 2r symplectic matrix on the coordinates `indices` of Sp_2g."""
    r = sigma.g
    if len(indices) != r or list(indices) != sorted(set(indices)) or not all(0 <= i < g for i in indices):
        raise ValueError(f"invalid embedding indices {indices} for r={r}, g={g}")
    a, b, c, d = int_identity(g), int_zeros(g), int_zeros(g), int_identity(g)
    for x, i in enumerate(indices):
        for y, j in enumerate(indices):
            a[i, j] = sigma.alpha[x, y]
            b[i, j] = sigma.beta[x, y]
            c[i, j] = sigma.gamma[x, y]
            d[i, j] = sigma.delta[x, y]
    return SymplecticMatrix.from_blocks(a, b, c, d)


# --- elementary matrices ---

class ElementaryMatrix(ABC):
    g: int

    @abstractmethod
    def matrix(self) -> SymplecticMatrix:
        pass

    @abstractmethod
    def inverse(self) -> list["ElementaryMatrix"]:
        """Elementary word whose product is the inverse."""
        pass


@dataclass(frozen=True, eq=False)
class Diag(ElementaryMatrix):
    u: IntMatrix

    @property
    def g(self) -> int:
        return self.u.shape[0]

    def matrix(self) -> SymplecticMatrix:
        z = int_zeros(self.g)
        return SymplecticMatrix.from_blocks(self.u, z, z, int_inverse(self.u).T)

    def inverse(self) -> list[ElementaryMatrix]:
        return [Diag(int_inverse(self.u))]

    def __repr__(self) -> str:
        return f"Diag({[[int(x) for x in row] for row in self.u]})"


@dataclass(frozen=True, eq=False)
class Trig(ElementaryMatrix):
    s: IntMatrix

    def __post_init__(self):
        if not is_symmetric(self.s):
            raise ValueError("Trig needs a symmetric matrix")

    @property
    def g(self) -> int:
        return self.s.shape[0]

    def matrix(self) -> SymplecticMatrix:
        i = int_identity(self.g)
        return SymplecticMatrix.from_blocks(i, self.s, int_zeros(self.g), i)

    def inverse(self) -> list[ElementaryMatrix]:
        return [Trig(-self.s)]

    def __repr__(self) -> str:
        return f"Trig({[[int(x) for x in row] for row in self.s]})"


@dataclass(frozen=True, eq=False)
class EmbeddedSL2(ElementaryMatrix):
    """An SL_2(Z) matrix acting on the first coordinate."""
    a: int
    b: int
    c: int
    d: int
    g: int

    def __post_init__(self):
        if self.a * self.d - self.b * self.c != 1:
            raise ValueError("EmbeddedSL2 needs determinant 1")

    def matrix(self) -> SymplecticMatrix:
        return embed_symplectic(SymplecticMatrix(int_matrix([[self.a, self.b], [self.c, self.d]])), (0,), self.g)

    def inverse(self) -> list[ElementaryMatrix]:
        return [EmbeddedSL2(self.d, -self.b, -self.c, self.a, self.g)]

    def __repr__(self) -> str:
        return f"EmbeddedSL2([[{self.a}, {self.b}], [{self.c}, {self.d}]])"


@dataclass(frozen=True, eq=False)
class EmbeddedJ(ElementaryMatrix):
    indices: tuple[int, ...]
    g: int

    def matrix(self) -> SymplecticMatrix:
        return embed_symplectic(J(len(self.indices)), self.indices, self.g)

    def inverse(self) -> list[ElementaryMatrix]:
        minus = int_identity(self.g)
        for i in self.indices:
            minus[i, i] = -1
        return [Diag(minus), self]

    @property
    def is_full(self) -> bool:
        return len(self.indices) == self.g

    def __repr__(self) -> str:
        return f"EmbeddedJ({self.indices})"


def classify(sigma: SymplecticMatrix) -> ElementaryMatrix | None:
    """The elementary matrix equal to sigma, or None."""
    g = sigma.g
    if int_is_zero(sigma.gamma):
        if int_is_zero(sigma.beta):
            return Diag(sigma.alpha.copy())
        i = int_identity(g)
        if int_equal(sigma.alpha, i) and int_equal(sigma.delta, i):
            return Trig(sigma.beta.copy())
    indices = tuple(i for i in range(g) if sigma.alpha[i, i] == 0)
    if indices and embed_symplectic(J(len(indices)), indices, g) == sigma:
        return EmbeddedJ(indices, g)
    if g == 1:
        return EmbeddedSL2(*(int(x) for x in sigma.m.flat), g=1)
    block = SymplecticMatrix(int_matrix([[sigma.m[0, 0], sigma.m[0, g]], [sigma.m[g, 0], sigma.m[g, g]]]))
    if embed_symplectic(block, (0,), g) == sigma:
        return EmbeddedSL2(*(int(x) for x in block.m.flat), g=g)
    return None


def recompose(word: Sequence[ElementaryMatrix], g: int) -> SymplecticMatrix:
    out = SymplecticMatrix.identity(g)
    for e in word:
        out = out @ e.matrix()
    return out


# --- the boundary list ---

def _sym2(a: int, b: int, c: int) -> IntMatrix:
    return int_matrix([[a, b], [b, c]])


SIGMA2_TRANSLATES = [
    (0, 0, 0), (1, 0, 0), (-1, 0, 0), (0, 0, 1), (0, 0, -1),
    (1, 0, 1), (1, 0, -1), (-1, 0, 1), (-1, 0, -1),
    (1, 1, 0), (-1, -1, 0), (0, 1, 1), (0, -1, -1), (1, -1, 1), (-1, 1, -1),
]


def _sigma2() -> list[SymplecticMatrix]:
    out = [embed_symplectic(J(1), (0,), 2), embed_symplectic(J(1), (1,), 2)]
    uu = _sym2(1, -1, 1)
    for sign in (1, -1):
        out.append(SymplecticMatrix.from_blocks(int_identity(2), int_zeros(2), sign * uu, int_identity(2)))
    for t in SIGMA2_TRANSLATES:
        out.append(J(2) @ Trig(_sym2(*t)).matrix())
    return out


def sigma_g_list(g: int) -> list[SymplecticMatrix]:
    """Matrices whose non-improvement characterises the reduced domain."""
    if g < 1:
        raise ValueError("g must be positive")
    if g == 1:
        return [J(1)]
    base = _sigma2()
    if g == 2:
        return base
    out = [embed_symplectic(s, pair, g) for pair in combinations(range(g), 2) for s in base]
    for r in range(3, g + 1):
        out.extend(embed_symplectic(J(r), idx, g) for idx in combinations(range(g), r))
    return out


# --- integer normal forms ---

def gcdex(a: int, b: int) -> tuple[int, int, int]:
    """(x, y, g) with g = gcd(a, b) >= 0 and a*x + b*y == g."""
    if b == 0:
        if a < 0:
            return -1, 0, -a
        return 1, 0, a
    q, r = divmod(a, b)
    x, y, g = gcdex(b, r)
    return y, x - y * q, g


def hnf_transform(a: IntMatrix) -> tuple[IntMatrix, IntMatrix]:
    """Row Hermite normal form: (H, U) with U unimodular and U a = H."""
    h = a.copy()
    rows, cols = h.shape
    u = int_identity(rows)
    row = 0
    for col in range(cols):
        if row == rows:
            break
        for r in range(row + 1, rows):
            y = h[r, col]
            if y == 0:
                continue
            x = h[row, col]
            s, t, g = gcdex(x, y)
            op = int_matrix([[s, t], [-y // g, x // g]])
            h[[row, r]] = op @ h[[row, r]]
            u[[row, r]] = op @ u[[row, r]]
        if h[row, col] == 0:
            continue
        if h[row, col] < 0:
            h[row], u[row] = -h[row], -u[row]
        for r in range(row):
            q = h[r, col] // h[row, col]
            if q:
                h[r] = h[r] - q * h[row]
                u[r] = u[r] - q * u[row]
        row += 1
    return h, u


def _is_diagonal(a: IntMatrix) -> bool:
    return all(a[i, j] == 0 for i in range(a.shape[0]) for j in range(a.shape[1]) if i != j)


def snf_transform(a: IntMatrix) -> tuple[IntMatrix, IntMatrix, IntMatrix]:
    """Smith normal form of a square matrix: (D, U, V) with U a V = D.

    Alternates row Hermite forms of the matrix and of its transpose until the
    result is diagonal, then enforces d_i | d_{i+1} with nonzero entries first.
    """
    n = a.shape[0]
    d, u, v = a.copy(), int_identity(n), int_identity(n)
    while not _is_diagonal(d):
        d, u1 = hnf_transform(d)
        u = u1 @ u
        dt, v1 = hnf_transform(d.T)
        d = dt.T
        v = v @ v1.T
    changed = True
    while changed:
        changed = False
        for i in range(n):
            for j in range(i + 1, n):
                di, dj = d[i, i], d[j, j]
                if di == 0 and dj != 0:
                    p = int_identity(n)
                    p[[i, j]] = p[[j, i]]
                    d, u, v = p @ d @ p, p @ u, v @ p
                    changed = True
                elif di != 0 and dj % di != 0:
                    x, y, g = gcdex(di, dj)
                    left, right = int_identity(n), int_identity(n)
                    left[i, i], left[i, j], left[j, i], left[j, j] = x, y, -dj // g, di // g
                    right[i, i], right[i, j], right[j, i], right[j, j] = 1, -y * dj // g, 1, x * di // g
                    d, u, v = left @ d @ right, left @ u, v @ right
                    changed = True
    for i in range(n):
        if d[i, i] < 0:
            d[i], u[i] = -d[i], -u[i]
    return d, u, v


# --- decomposition ---

class _Word:
    """Tracks sigma = left * cur * right while cur is simplified."""

    def __init__(self, sigma: SymplecticMatrix):
        self.cur = sigma
        self.left: list[ElementaryMatrix] = []
        self.right: list[ElementaryMatrix] = []

    def apply_left(self, e: ElementaryMatrix):
        self.cur = e.matrix() @ self.cur
        self.left.extend(e.inverse())

    def apply_right(self, e: ElementaryMatrix):
        self.cur = self.cur @ e.matrix()
        self.right[0:0] = e.inverse()

    def smith(self):
        d, u, v = snf_transform(self.cur.gamma)
        self.apply_left(Diag(int_inverse(u).T))
        self.apply_right(Diag(v))
        return d


def _embed_word(word: list[ElementaryMatrix], g: int) -> list[ElementaryMatrix]:
    out: list[ElementaryMatrix] = []
    for e in word:
        r = e.g
        if isinstance(e, Diag):
            u = int_identity(g)
            u[:r, :r] = e.u
            out.append(Diag(u))
        elif isinstance(e, Trig):
            s = int_zeros(g)
            s[:r, :r] = e.s
            out.append(Trig(s))
        elif isinstance(e, EmbeddedJ):
            out.append(EmbeddedJ(e.indices, g))
        else:
            out.append(EmbeddedSL2(e.a, e.b, e.c, e.d, g))
    return out


def max_word_length(g: int) -> int:
    return 1 + 5 * (g - 1)


def _drop_rank(w: _Word):
    """Right-multiply by an SL_2 matrix on the first coordinate so that gamma becomes singular.

    The bottom rows of sigma span a rank g lattice, which meets the span of
    e_1, f_1, ..., f_g; a primitive vector in the intersection is moved to
    the f side.
    """
    g = w.cur.g
    gamma, delta = w.cur.gamma, w.cur.delta
    _, u = hnf_transform(gamma[:, 1:].copy())
    row = u[g - 1]
    x = int(sum(row[i] * gamma[i, 0] for i in range(g)))
    y = int(sum(row[i] * delta[i, 0] for i in range(g)))
    if x == 0:
        raise DecompositionError("gamma is singular already")
    k = gcdex(x, y)[2]
    s, t, _ = gcdex(y // k, x // k)
    w.apply_right(EmbeddedSL2(y // k, t, -x // k, s, g))
    if int_rank(w.cur.gamma) == g:
        raise DecompositionError("rank of gamma did not drop")


def decompose(sigma: SymplecticMatrix) -> list[ElementaryMatrix]:
    """Write sigma as a product of at most 1 + 5(g-1) elementary matrices (left to right).

    With gamma singular, sigma = Diag·emb(sigma')·Diag·Trig for a symplectic
    sigma' of size 2r, r = rank(gamma) < g; otherwise one embedded SL_2
    factor on the right makes gamma singular first.
    """
    e = classify(sigma)
    if e is not None:
        return [e]
    g = sigma.g
    w = _Word(sigma)
    middle: list[ElementaryMatrix] = []
    if not int_is_zero(sigma.gamma):
        if int_rank(sigma.gamma) == g:
            _drop_rank(w)
        d = w.smith()
        r = sum(1 for i in range(g) if d[i, i] != 0)
        if r > 0:
            _clear_lower_delta(w, r)
            c = w.cur
            sub = SymplecticMatrix.from_blocks(c.alpha[:r, :r], c.beta[:r, :r], c.gamma[:r, :r], c.delta[:r, :r])
            if not sub.is_symplectic():
                raise DecompositionError("upper-left block is not symplectic")
            middle = _embed_word(decompose(sub), g)
            w.cur = embed_symplectic(sub, tuple(range(r)), g).inverse() @ w.cur
    if not int_is_zero(w.cur.gamma):
        raise DecompositionError("remaining factor is not block upper triangular")
    a = w.cur.alpha
    tail = [Diag(a.copy()), Trig(int_inverse(a) @ w.cur.beta)]
    word = simplify(w.left + middle + tail + w.right, g)
    logger.debug("decomposed %d x %d matrix into %d factors", 2 * g, 2 * g, len(word))
    return word


def _clear_lower_delta(w: _Word, r: int):
    """Right-multiply so the last g-r rows of delta become [0 | I]."""
    g = w.cur.g
    low = w.cur.delta[r:, :]
    h, t = hnf_transform(low.T.copy())
    if not int_equal(h[:g - r, :], int_identity(g - r)) or not int_is_zero(h[g - r:, :]):
        raise DecompositionError("lower rows of delta are not primitive")
    perm = int_zeros(g)
    for i in range(g):
        perm[i, (i + r) % g] = 1
    wmat = t.T @ perm
    w.apply_right(Diag(int_inverse(wmat).T))


def simplify(word: list[ElementaryMatrix], g: int) -> list[ElementaryMatrix]:
    """Drop identities, move Diag factors leftwards through Trig and J_g, merge neighbours."""
    word = list(word)
    changed = True
    while changed:
        changed = False
        out: list[ElementaryMatrix] = []
        for e in word:
            if e.matrix().is_identity():
                changed = True
                continue
            if out:
                prev = out[-1]
                if isinstance(prev, Diag) and isinstance(e, Diag):
                    out[-1] = Diag(prev.u @ e.u)
                    changed = True
                    continue
                if isinstance(prev, Trig) and isinstance(e, Trig):
                    out[-1] = Trig(prev.s + e.s)
                    changed = True
                    continue
                if isinstance(prev, Trig) and isinstance(e, Diag):
                    uinv = int_inverse(e.u)
                    out[-1] = e
                    out.append(Trig(uinv @ prev.s @ uinv.T))
                    changed = True
                    continue
                if isinstance(prev, EmbeddedJ) and prev.is_full and isinstance(e, Diag):
                    out[-1] = Diag(int_inverse(e.u).T)
                    out.append(prev)
                    changed = True
                    continue
            out.append(e)
        word = out
    return word


# --- random generators ---

def random_unimodular(g: int, rng: random.Random, steps: int = 3) -> IntMatrix:
    u = int_identity(g)
    for _ in range(steps):
        if g > 1:
            i, j = rng.sample(range(g), 2)
            u[i] = u[i] + rng.choice((-2, -1, 1, 2)) * u[j]
        k = rng.randrange(g)
        if rng.random() < 0.3:
            u[k] = -u[k]
    return u


def random_elementary(g: int, rng: random.Random, bound: int = 2) -> ElementaryMatrix:
    kind = rng.randrange(3)
    if kind == 0:
        s = int_zeros(g)
        for i in range(g):
            for j in range(i, g):
                s[i, j] = s[j, i] = rng.randint(-bound, bound)
        return Trig(s)
    if kind == 1:
        return Diag(random_unimodular(g, rng))
    size = rng.randint(1, g)
    return EmbeddedJ(tuple(sorted(rng.sample(range(g), size))), g)


def random_symplectic(g: int, length: int = 8, rng: random.Random | None = None) -> SymplecticMatrix:
    """Product of `length` random elementary generators."""
    rng = rng or random.Random()
    return recompose([random_elementary(g, rng) for _ in range(length)], g)


def is_elementary_word(word: Sequence[ElementaryMatrix]) -> bool:
    return all(isinstance(e, ElementaryMatrix) for e in word)


def det_gamma(sigma: SymplecticMatrix) -> int:
    return int_det(sigma.gamma)


def gamma_rank(sigma: SymplecticMatrix) -> int:
    return int_rank(sigma.gamma)


def inverse_word(word: Sequence[ElementaryMatrix]) -> list[ElementaryMatrix]:
    """Elementary word for the inverse of the product of `word`."""
    out: list[ElementaryMatrix] = []
    for e in reversed(word):
        out.extend(e.inverse())
    return out
