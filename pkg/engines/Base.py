from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from math import ceil, log2
from typing import Iterator, Sequence, TypeAlias

import numpy as np

import config
from arith.ball import (
    ComplexBall, RealBall, ball_add, ball_exp, ball_mul, ball_sub, bits, real_neg, finite_radius_below,
)
from arith.matrix import BallMatrix, BallVector, symmetrize
from errors import DecompositionError, PrecisionUnreachable

logger = config.get_logger("sum")

Char: TypeAlias = tuple[int, int]


def char_bits(a: int, g: int) -> list[int]:
    """Bits (a_1, ..., a_g) of a characteristic index, a_1 most significant."""
    return [(a >> (g - 1 - i)) & 1 for i in range(g)]


def char_index(a: Sequence[int]) -> int:
    out = 0
    for x in a:
        out = (out << 1) | (int(x) & 1)
    return out


def char_key(t: int, g: int) -> Char:
    """(a, b) from the combined index t = a·2^g + b."""
    return t >> g, t & ((1 << g) - 1)


def all_chars(g: int) -> list[Char]:
    return [char_key(t, g) for t in range(1 << (2 * g))]


def is_odd(ch: Char) -> bool:
    return bin(ch[0] & ch[1]).count("1") % 2 == 1


def parity(a: int, b: int) -> int:
    """(-1)^{aᵀb} as 0 or 1."""
    return bin(a & b).count("1") & 1


@dataclass
class ThetaValues:
    """θ̃_{a,b}(z,τ) (tilde=True) or θ_{a,b}(z,τ) for a set of characteristics."""
    g: int
    values: dict[Char, ComplexBall]
    tilde: bool = True
    prec: int = 0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.values:
            raise ValueError("ThetaValues needs at least one characteristic")

    def __getitem__(self, ch: Char) -> ComplexBall:
        return self.values[ch]

    def chars(self) -> list[Char]:
        return sorted(self.values)

    def max_radius(self) -> float:
        return max(float(RealBall(x.rad)) for x in self.values.values())


@dataclass
class ThetaJet:
    """∂^ν θ_{a,b}(z,τ) for all |ν| <= order; plain (not normalized) values."""
    g: int
    order: int
    values: dict[Char, dict[tuple[int, ...], ComplexBall]]
    prec: int = 0

    def __getitem__(self, key: tuple[Char, tuple[int, ...]]) -> ComplexBall:
        ch, nu = key
        return self.values[ch][nu]

    def theta(self) -> ThetaValues:
        zero = (0,) * self.g
        return ThetaValues(self.g, {ch: d[zero] for ch, d in self.values.items()}, tilde=False, prec=self.prec)


def multi_indices(g: int, order: int) -> list[tuple[int, ...]]:
    """All ν in Z_{>=0}^g with |ν| <= order, in graded lexicographic order."""
    out: list[tuple[int, ...]] = []

    def rec(prefix: tuple[int, ...], left: int):
        if len(prefix) == g:
            out.append(prefix)
            return
        for k in range(left + 1):
            rec(prefix + (k,), left - k)

    rec((), order)
    return sorted(out, key=lambda nu: (sum(nu), tuple(-x for x in nu)))


def _rescale(values: ThetaValues, exponent: RealBall, prec: int, tilde: bool) -> ThetaValues:
    f = ball_exp(ComplexBall.from_real(exponent), prec + 4)
    out = {ch: ball_mul(x, f, prec) for ch, x in values.values.items()}
    return ThetaValues(values.g, out, tilde=tilde, prec=values.prec, meta=dict(values.meta))


def to_plain(values: ThetaValues, ctx, prec) -> ThetaValues:
    """θ = exp(π yᵀY⁻¹y)·θ̃ at ctx."""
    if not values.tilde:
        return values
    return _rescale(values, ctx.u, bits(prec), False)


def to_tilde(values: ThetaValues, ctx, prec) -> ThetaValues:
    if values.tilde:
        return values
    return _rescale(values, real_neg(ctx.u), bits(prec), True)


class ThetaEngine(ABC):
    """Base class for theta evaluation engines.
    """

    name = "base"

    @abstractmethod
    def run(self, ctx, prec) -> ThetaValues:
        """
        Evaluate all θ̃_{a,b} at a reduced point.

        Args:
            ctx (SiegelContext): The point, with Siegel-reduced τ and ‖v‖_∞ <= 1.
            prec (int | Precision): Target absolute precision in bits.

        Returns:
            ThetaValues: θ̃_{a,b}(z,τ) for all 2^{2g} characteristics.
        """
        pass

    def process(self, z: BallVector, tau: BallMatrix, prec, chars: Sequence[Char] | None = None) -> ThetaValues:
        """
        Evaluate θ̃_{a,b}(z,τ) at an arbitrary point: reduce τ, reduce z, run the
        engine, then map the values back with the transformation formula.

        Args:
            z (BallVector): Point in C^g.
            tau (BallMatrix): Point of the Siegel upper half-space.
            prec (int | Precision): Target absolute precision in bits.
            chars: Characteristics to keep in the output; all of them by default.

        Returns:
            ThetaValues: θ̃_{a,b}(z,τ), normalized at the input point.
        """
        from siegel.context import SiegelContext, act, reduce_z, tilde_phase
        from siegel.reduction import siegel_reduce_word
        from siegel.transform import transform_values
        from siegel.symplectic import decompose, inverse_word

        p = bits(prec)
        tau = symmetrize(tau)
        g = len(tau)
        sigma, word = siegel_reduce_word(tau, prec=p)
        extra = 16 + _cocycle_bits(sigma, tau)
        q = p + extra
        if sigma.is_identity():
            z_r, tau_r = list(z), tau
        else:
            z_r, tau_r = act(sigma, z, tau, q + 16)
        ctx_r = SiegelContext.create(z_r, tau_r, q)
        z2, w, _ = reduce_z(ctx_r)
        values = self.run(ctx_r.with_z(z2), q)
        if any(w):
            phase = tilde_phase(ctx_r, w)
            values = ThetaValues(g, {ch: ball_mul(phase, x, q) for ch, x in values.values.items()}, prec=q,
                                 meta=values.meta)
        if not sigma.is_identity():
            inv = sigma.inverse()
            try:
                back = decompose(inv)
            except DecompositionError as e:
                logger.debug("decomposition failed (%s), using the reduction word", e)
                back = inverse_word(word)
            plain = to_plain(values, ctx_r, q)
            plain = transform_values(inv, z_r, tau_r, plain, q, word=back)
            values = to_tilde(plain, SiegelContext.create(list(z), tau, q), q)
        if chars is not None:
            values = ThetaValues(g, {ch: values.values[ch] for ch in chars}, prec=p, meta=values.meta)
        values.prec = p
        values.meta.setdefault("engine", self.name)
        values.meta["sigma"] = sigma
        _check_radii(values, p)
        return values

    @abstractmethod
    def validate_params(self, ctx, prec) -> bool:
        """
        Validate that the engine can run on the given point and precision.

        Args:
            ctx (SiegelContext): The point.
            prec (int | Precision): Target precision.

        Returns:
            bool: True if the engine accepts the input, False otherwise.
        """
        return True

    @staticmethod
    @abstractmethod
    def get_bench_params():
        """
        Get the benchmark ladder for the engine.

        Returns:
            Dict[int, List[int]]: Precisions in bits to time, keyed by dimension g.
        """
        pass


def _cocycle_bits(sigma, tau: BallMatrix) -> int:
    """log2 of |det(γτ+δ)|^{-1/2}, the growth of absolute errors when mapping back, at float precision."""
    if sigma.is_identity():
        return 0
    t = np.array([[complex(x) for x in row] for row in tau], dtype=np.complex128)
    m = sigma.gamma.astype(np.float64) @ t + sigma.delta.astype(np.float64)
    d = abs(np.linalg.det(m))
    if d == 0 or not np.isfinite(d):
        return 64
    return max(0, ceil(-0.5 * log2(d)))


def _check_radii(values: ThetaValues, p: int):
    if not all(finite_radius_below(x, max(p // 2, 4)) for x in values.values.values()):
        raise PrecisionUnreachable(f"output radius exceeds 2^-{max(p // 2, 4)} at target precision {p}")


def iter_points(n: int, g: int) -> Iterator[tuple[int, ...]]:
    """All vectors in {0,...,n-1}^g, first coordinate slowest."""
    for t in np.ndindex(*([n] * g)):
        yield tuple(int(x) for x in t)


def hadamard(v: Sequence[ComplexBall], prec) -> list[ComplexBall]:
    """H_g(v)_a = Σ_{a'} (-1)^{a'ᵀa} v_{a'}, by the split-and-concatenate recursion."""
    n = len(v)
    if n & (n - 1):
        raise ValueError(f"Hadamard transform needs a power-of-two length, got {n}")
    if n == 1:
        return [v[0]]
    half = n // 2
    lo = hadamard(v[:half], prec)
    hi = hadamard(v[half:], prec)
    return [ball_add(x, y, prec) for x, y in zip(lo, hi)] + [ball_sub(x, y, prec) for x, y in zip(lo, hi)]
