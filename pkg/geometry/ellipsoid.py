"""
The ellipsoid data structure: integer points n with ‖C(n - v)‖² < R², organized
by layers. A tree of dimension d fixes the coordinates n_{d+1}, ..., n_g (here
0-based: indices d..g-1) and has one child per admissible value of n_d; in
dimension 1 only the range [lo, hi] of n_1 is stored.

Layer bounds are computed in double precision and widened by a relative slack
of 2^-workprec, so the tree may hold a few points slightly outside the
ellipsoid but never misses one inside it.
"""

from dataclasses import dataclass, field
from math import ceil, floor, sqrt
from typing import Iterator, Sequence

import numpy as np

import config
from arith.matrix import RealMatrix, RealVector

logger = config.get_logger("geometry")


@dataclass(frozen=True)
class EllipsoidTree:
    g: int
    d: int
    lo: int
    hi: int
    fixed: tuple[int, ...]
    children: tuple["EllipsoidTree", ...] = field(repr=False)
    count: int
    box: tuple[int, ...]
    partial: float = 0.0

    def __len__(self) -> int:
        return self.count

    def is_empty(self) -> bool:
        return self.count == 0

    def points(self) -> Iterator[tuple[int, ...]]:
        if self.d == 1:
            for n in range(self.lo, self.hi + 1):
                yield (n,) + self.fixed
            return
        for child in self.children:
            yield from child.points()

    def __contains__(self, n: Sequence[int]) -> bool:
        n = tuple(int(x) for x in n)
        if n[self.d:] != self.fixed:
            return False
        if not self.lo <= n[self.d - 1] <= self.hi:
            return False
        if self.d == 1:
            return True
        return n in self.children[n[self.d - 1] - self.lo]

    def leaves(self) -> Iterator["EllipsoidTree"]:
        if self.d == 1:
            if self.count:
                yield self
            return
        for child in self.children:
            yield from child.leaves()

    def layer_lengths(self) -> list[int]:
        return [leaf.hi - leaf.lo + 1 for leaf in self.leaves()]


def _as_float(C, v) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(C, np.ndarray):
        cf = C.astype(np.float64)
    else:
        cf = np.array([[float(x) for x in row] for row in C], dtype=np.float64)
    vf = np.array([float(x) for x in v], dtype=np.float64)
    return cf, vf


def build_ellipsoid(C: RealMatrix | np.ndarray, v: RealVector | Sequence[float], R_sq: float,
                    workprec: int = config.ELLIPSOID_PREC,
                    v_radius: Sequence[float] | None = None) -> EllipsoidTree:
    """Ellipsoid tree containing every integer point of E(v, R).

    v_radius gives per-coordinate half-widths of a box of centers; the tree then
    covers the union of the ellipsoids centered in the box.
    """
    cf, vf = _as_float(C, v)
    g = cf.shape[0]
    slack = 2.0 ** -workprec
    r2 = max(float(R_sq), 0.0)
    if v_radius is not None and any(v_radius):
        hw = np.abs(cf) @ np.array(v_radius, dtype=np.float64)
        r2 = (sqrt(r2) + float(np.linalg.norm(hw))) ** 2
    r2 = r2 * (1 + slack) + slack * g
    tree = _build(cf, vf, r2, g, (), 0.0, slack)
    logger.debug("ellipsoid of dimension %d with R^2 = %.6g: %d points", g, r2, tree.count)
    return tree


def _build(cf: np.ndarray, vf: np.ndarray, r2: float, d: int, fixed: tuple[int, ...], partial: float,
           slack: float) -> EllipsoidTree:
    g = cf.shape[0]
    i = d - 1
    rest = r2 - partial
    if rest < 0:
        return EllipsoidTree(g, d, 0, -1, fixed, (), 0, (0,) * g, partial)
    s = sum(cf[i, j] * (fixed[j - d] - vf[j]) for j in range(d, g))
    center = vf[i] - s / cf[i, i]
    w = sqrt(rest) / cf[i, i]
    pad = slack * (abs(center) + w + 1)
    lo = ceil(center - w - pad)
    hi = floor(center + w + pad)
    fixed_box = tuple(abs(x) for x in fixed)
    if d == 1:
        if lo > hi:
            return EllipsoidTree(g, 1, lo, hi, fixed, (), 0, (0,) * g, partial)
        return EllipsoidTree(g, 1, lo, hi, fixed, (), hi - lo + 1, (max(abs(lo), abs(hi)),) + fixed_box, partial)
    children = []
    for n in range(lo, hi + 1):
        t = cf[i, i] * (n - center)
        children.append(_build(cf, vf, r2, d - 1, (n,) + fixed, partial + t * t, slack))
    count = sum(c.count for c in children)
    box = [0] * g
    for c in children:
        if c.count:
            box = [max(x, y) for x, y in zip(box, c.box)]
    return EllipsoidTree(g, d, lo, hi, fixed, tuple(children), count, tuple(box), partial)


def count_bound(c: Sequence[float], R: float) -> int:
    """∏(1 + ⌊2R/c_j⌋), an upper bound on the number of points."""
    out = 1
    for cj in c:
        out *= 1 + floor(2 * R / float(cj))
    return out
