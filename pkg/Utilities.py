"""
Utilities module for the theta evaluator.

This module provides parsing of matrices and vectors from the command line,
bit-exact serialization of balls, random reduced inputs and engine lookup.
"""

import json
import re
from typing import Sequence

import numpy as np
from mpmath import mp
from mpmath.libmp import MPZ, from_man_exp, fzero, to_man_exp

import config
from arith.ball import MPF, ComplexBall, RealBall, radd, real_add, real_neg
from arith.matrix import BallMatrix, BallVector
from engines.Base import ThetaEngine, ThetaJet, ThetaValues, char_bits

ENGINES = {
    "sum-naive": "SumNaive",
    "sum": "Summation",
    "ql": "QuasiLinear",
    "auto": "QuasiLinear",
}

_NUMBER = r"0x[0-9a-fA-F]+p[+-]?\d+|(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"
_TERM = re.compile(rf"\s*([+-]?)\s*({_NUMBER})?\s*(i?)\s*")


def get_engine(name: str) -> ThetaEngine:
    """
    Import the engine module from the engines folder and instantiate it.

    Args:
        name (str): sum-naive, sum, ql or auto

    Returns:
        ThetaEngine: engine instance
    """
    try:
        cls_name = ENGINES[name]
    except KeyError:
        raise ValueError(f"Engine {name} not found")
    module = __import__(f'engines.{cls_name}', fromlist=[cls_name])
    return getattr(module, cls_name)()


def serialize_mpf(x: MPF) -> str:
    """Hex-dyadic string m·2^e as 0x<m>p<e>, exact."""
    if x == fzero:
        return "0x0p0"
    man, exp = to_man_exp(x)
    sign = "-" if man < 0 else ""
    return f"{sign}0x{abs(int(man)):x}p{exp}"


def parse_mpf(s: str) -> MPF:
    s = s.strip()
    sign = -1 if s.startswith("-") else 1
    s = s.lstrip("+-")
    if not s.lower().startswith("0x") or "p" not in s.lower():
        raise ValueError(f"not a hex-dyadic number: {s!r}")
    man, exp = s[2:].lower().split("p")
    return from_man_exp(MPZ(sign * int(man, 16)), int(exp))


def _real_from_token(tok: str, prec: int) -> RealBall:
    if tok.lower().startswith("0x"):
        return RealBall(parse_mpf(tok))
    return RealBall.from_str(tok, prec)


def parse_complex(s: str, prec: int) -> ComplexBall:
    """Complex ball from 'a+bi', 'bi', 'i', 'a'; decimals are outward rounded, hex-dyadic numbers exact."""
    text = s.strip()
    if not text:
        raise ValueError("empty number")
    re_part, im_part = RealBall(), RealBall()
    pos = 0
    seen = False
    while pos < len(text):
        m = _TERM.match(text, pos)
        if m is None or m.end() == pos or not (m.group(2) or m.group(3)):
            raise ValueError(f"cannot parse {s!r} near position {pos}")
        sign, num, imag = m.groups()
        x = _real_from_token(num, prec) if num else RealBall.from_int(1)
        if sign == "-":
            x = real_neg(x)
        if imag:
            im_part = real_add(im_part, x, prec)
        else:
            re_part = real_add(re_part, x, prec)
        pos = m.end()
        seen = True
    if not seen:
        raise ValueError(f"cannot parse {s!r}")
    return ComplexBall(re_part.mid, im_part.mid, radd(re_part.rad, im_part.rad))


def parse_matrix(s: str, g: int, prec: int) -> BallMatrix:
    """Rows separated by ';', entries by ','; a single entry for g = 1."""
    rows = [r for r in s.split(";") if r.strip()]
    out = [[parse_complex(x, prec) for x in r.split(",")] for r in rows]
    if len(out) != g or any(len(r) != g for r in out):
        raise ValueError(f"expected a {g}x{g} matrix, got {len(out)} rows")
    for i in range(g):
        for j in range(i):
            a, b = out[i][j], out[j][i]
            if not a.overlaps(b):
                raise ValueError(f"matrix is not symmetric at ({i}, {j})")
    return out


def parse_vector(s: str | None, g: int, prec: int) -> BallVector:
    if not s:
        return [ComplexBall()] * g
    out = [parse_complex(x, prec) for x in s.split(",")]
    if len(out) != g:
        raise ValueError(f"expected {g} entries, got {len(out)}")
    return out


def ball_to_dict(x: ComplexBall) -> dict:
    return {"mid_re": serialize_mpf(x.re), "mid_im": serialize_mpf(x.im), "rad": serialize_mpf(x.rad)}


def ball_from_dict(d: dict) -> ComplexBall:
    return ComplexBall(parse_mpf(d["mid_re"]), parse_mpf(d["mid_im"]), parse_mpf(d["rad"]))


def bit_string(a: int, g: int) -> str:
    return "".join(str(x) for x in char_bits(a, g))


def values_to_json(values: ThetaValues, prec: int) -> dict:
    g = values.g
    rows = [{"a": bit_string(a, g), "b": bit_string(b, g), **ball_to_dict(values[(a, b)])}
            for a, b in values.chars()]
    return {"g": g, "prec": prec, "values": rows}


def values_from_json(data: dict | str) -> ThetaValues:
    if isinstance(data, str):
        data = json.loads(data)
    g = data["g"]
    vals = {(int(r["a"], 2), int(r["b"], 2)): ball_from_dict(r) for r in data["values"]}
    return ThetaValues(g, vals, prec=data["prec"])


def jet_to_json(jet: ThetaJet) -> dict:
    g = jet.g
    rows = []
    for (a, b) in sorted(jet.values):
        for nu, x in jet.values[(a, b)].items():
            rows.append({"a": bit_string(a, g), "b": bit_string(b, g), "nu": list(nu), **ball_to_dict(x)})
    return {"g": g, "prec": jet.prec, "order": jet.order, "values": rows}


def random_reduced_tau(g: int, rng: np.random.Generator) -> BallMatrix:
    """Re τ uniform in [-1/2, 1/2], Im τ = BᵀB with B = [[I, v], [0, √3/2]], v uniform in [-1/2, 1/2]^{g-1}.

    Entries are exact (double-precision) balls.
    """
    if g == 1:
        # B would give Im τ = 3/4, outside the fundamental domain
        return [[ComplexBall.from_complex(complex(rng.uniform(-0.5, 0.5), rng.uniform(1.0, 2.0)))]]
    B = np.eye(g)
    B[:-1, -1] = rng.uniform(-0.5, 0.5, size=g - 1)
    B[-1, -1] = np.sqrt(3) / 2
    Y = B.T @ B
    X = rng.uniform(-0.5, 0.5, size=(g, g))
    X = np.triu(X) + np.triu(X, 1).T
    return [[ComplexBall.from_complex(complex(X[i, j], Y[i, j])) for j in range(g)] for i in range(g)]


def random_reduced_z(tau: BallMatrix, rng: np.random.Generator) -> BallVector:
    """z with Re z uniform in [-1/2, 1/2]^g and Im z = Y w, w uniform in [-1/2, 1/2]^g, so that ‖v‖_∞ <= 1."""
    g = len(tau)
    Y = np.array([[complex(x).imag for x in row] for row in tau])
    w = rng.uniform(-0.5, 0.5, size=g)
    x = rng.uniform(-0.5, 0.5, size=g)
    y = Y @ w
    return [ComplexBall.from_complex(complex(x[i], y[i])) for i in range(g)]


def format_ball(x: ComplexBall, digits: int = 20) -> tuple[str, str, str]:
    """Decimal midpoint parts and radius for display."""
    with mp.workprec(max(digits * 4, config.DEFAULT_PREC)):
        return (mp.nstr(mp.make_mpf(x.re), digits), mp.nstr(mp.make_mpf(x.im), digits),
                mp.nstr(mp.make_mpf(x.rad), 3))


def engine_names() -> Sequence[str]:
    return list(ENGINES)
