"""
Main module for the theta evaluator.

This module provides the command-line entry point: evaluation of all theta
values, Siegel reduction, jets of partial derivatives and tail-bound tables.
Exit codes: 0 on success, 2 on invalid input, 3 on a singular or
non-positive-definite point, 4 when the target precision cannot be reached.
"""

import argparse
import json
import sys

from prettytable import PrettyTable

import config
from Utilities import (
    ball_to_dict, bit_string, engine_names, format_ball, get_engine, jet_to_json, parse_matrix, parse_vector,
    values_to_json,
)
from arith.ball import ComplexBall
from deriv import jet_all, tau_derivatives
from engines.Base import ThetaValues, to_plain
from errors import NotPositiveDefinite, PrecisionUnreachable, SingularCocycle, ThetaError
from geometry.bounds import old_bound_applies, tail_bound_new, tail_bound_old
from siegel.context import SiegelContext, act, reduce_z, v_norm_inf
from siegel.reduction import is_siegel_reduced, siegel_reduce_word
from siegel.symplectic import decompose

logger = config.get_logger("cli")

EXIT_INPUT = 2
EXIT_DOMAIN = 3
EXIT_PRECISION = 4


def values_table(values: ThetaValues, digits: int) -> PrettyTable:
    table = PrettyTable()
    table.field_names = ["a", "b", "Re", "Im", "Radius"]
    table.align = "r"
    for a, b in values.chars():
        table.add_row([bit_string(a, values.g), bit_string(b, values.g), *format_ball(values[(a, b)], digits)])
    return table


def emit(args, payload: dict, table: PrettyTable | None = None, title: str | None = None):
    if args.format == "json":
        print(json.dumps(payload, indent=1 if args.pretty else None))
        return
    if title:
        print(title)
    if table is not None:
        print(table)


def read_point(args) -> tuple[list, list]:
    if args.prec < 2:
        raise ValueError("precision must be at least 2 bits")
    tau = parse_matrix(args.tau, args.g, args.prec + 16)
    z = parse_vector(args.z, args.g, args.prec + 16)
    return z, tau


def cmd_eval(args) -> int:
    z, tau = read_point(args)
    engine = get_engine(args.engine)
    values = engine.process(z, tau, args.prec)
    digits = max(5, min(args.prec * 3 // 10, 60))
    payload = values_to_json(values, args.prec)
    payload["engine"] = values.meta.get("engine", engine.name)
    table = values_table(values, digits)
    title = "θ̃_{a,b}(z,τ)"
    if args.theta:
        ctx = SiegelContext.create(z, tau, args.prec + 32)
        plain = to_plain(values, ctx, args.prec + 32)
        payload["theta"] = values_to_json(plain, args.prec)["values"]
        table = values_table(plain, digits)
        title = "θ_{a,b}(z,τ)"
    emit(args, payload, table, title)
    return 0


def cmd_reduce(args) -> int:
    _, tau = read_point(args)
    sigma, word = siegel_reduce_word(tau, prec=args.prec)
    reduced = act(sigma, [ComplexBall()] * args.g, tau, args.prec + 16)[1] if not sigma.is_identity() else tau
    payload = {
        "g": args.g,
        "sigma": [[int(x) for x in row] for row in sigma.m],
        "tau": [[ball_to_dict(x) for x in row] for row in reduced],
        "reduction_word": [repr(e) for e in word],
    }
    if args.decompose:
        payload["decomposition"] = [repr(e) for e in decompose(sigma)]
    if args.format == "json":
        emit(args, payload)
        return 0
    print(f"σ = {sigma!r}")
    table = PrettyTable()
    table.field_names = ["i", "j", "Re", "Im", "Radius"]
    for i, row in enumerate(reduced):
        for j, x in enumerate(row):
            table.add_row([i, j, *format_ball(x, 20)])
    print(table)
    print("word: " + " · ".join(payload["reduction_word"] or ["I"]))
    if args.decompose:
        print("decomposition: " + " · ".join(payload["decomposition"] or ["I"]))
    return 0


def cmd_jet(args) -> int:
    z, tau = read_point(args)
    if args.B < 0:
        raise ValueError("order must be nonnegative")
    if not is_siegel_reduced(tau, prec=args.prec):
        raise ValueError("jets are computed at reduced points only; run `reduce` first")
    ctx = SiegelContext.create(z, tau, args.prec + 32)
    if v_norm_inf(ctx) > 1:
        _, w, _ = reduce_z(ctx)
        raise ValueError(f"z is not reduced (translate by τ·{w} first)")
    jet = jet_all(ctx, args.prec, args.B, processes=args.jobs)
    payload = jet_to_json(jet)
    if args.tau_derivatives:
        dt = tau_derivatives(jet)
        payload["tau_derivatives"] = [
            {"a": bit_string(a, args.g), "b": bit_string(b, args.g), "j": j, "k": k,
             **ball_to_dict(x)}
            for (a, b), row in sorted(dt.items()) for (j, k), x in sorted(row.items())
        ]
    if args.format == "json":
        emit(args, payload)
        return 0
    table = PrettyTable()
    table.field_names = ["a", "b", "ν", "Re", "Im", "Radius"]
    table.align = "r"
    for row in payload["values"]:
        x = jet.values[(int(row["a"], 2), int(row["b"], 2))][tuple(row["nu"])]
        table.add_row([row["a"], row["b"], tuple(row["nu"]), *format_ball(x, 20)])
    print(table)
    if args.tau_derivatives:
        table = PrettyTable()
        table.field_names = ["a", "b", "(j,k)", "Re", "Im", "Radius"]
        for (a, b), row in sorted(dt.items()):
            for jk, x in sorted(row.items()):
                table.add_row([bit_string(a, args.g), bit_string(b, args.g), jk, *format_ball(x, 20)])
        print(table)
    return 0


def tail_rows(g: int, p: int, radii) -> list[list]:
    """Old and new tail bounds at Im τ = I (all c_j = ρ = 1)."""
    c = [1] * g
    rows = []
    for R in radii:
        old = "--"
        if old_bound_applies(g, 1, R, p):
            old = f"{float(tail_bound_old(g, 1, R, p)):.1e}"
        try:
            new = f"{float(tail_bound_new(g, c, R, p)):.1e}"
        except ThetaError:
            new = "--"
        rows.append([R, old, new])
    return rows


def cmd_tail_table(args) -> int:
    radii = list(range(args.R_min, args.R_max + 1))
    payload = {"tables": []}
    for g, p in args.blocks:
        rows = tail_rows(g, p, radii)
        payload["tables"].append({"g": g, "p": p, "rows": [{"R": r, "old": o, "new": n} for r, o, n in rows]})
        if args.format != "json":
            table = PrettyTable()
            table.field_names = ["R", "old bound", "new bound"]
            table.align = "r"
            for row in rows:
                table.add_row(row)
            print(f"g = {g}, p = {p}")
            print(table)
    if args.format == "json":
        emit(args, payload)
    return 0


def block_list(s: str) -> list[tuple[int, int]]:
    """"2:0,6:4" -> [(2, 0), (6, 4)]."""
    out = []
    for item in s.split(","):
        g, _, p = item.partition(":")
        out.append((int(g), int(p or 0)))
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Certified evaluation of Riemann theta functions")
    parser.add_argument('--format', choices=['text', 'json'], default='text')
    parser.add_argument('--pretty', action='store_true', help='Indent JSON output')
    sub = parser.add_subparsers(dest='command', required=True)

    def point_args(p):
        p.add_argument('--g', type=int, required=True, help='Dimension')
        p.add_argument('--tau', type=str, required=True, help='τ: rows separated by ";", entries by ","')
        p.add_argument('--z', type=str, default=None, help='z entries separated by ","; zero by default')
        p.add_argument('--prec', '-N', type=int, default=config.DEFAULT_PREC, help='Absolute precision in bits')

    p = sub.add_parser('eval', help='All θ_{a,b}(z,τ)')
    point_args(p)
    p.add_argument('--engine', '-E', choices=engine_names(), default='auto')
    p.add_argument('--theta', action='store_true', help='Also output θ (not normalized)')
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser('reduce', help='Siegel reduction of τ')
    point_args(p)
    p.add_argument('--decompose', action='store_true', help='Also print the decomposition of σ')
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser('jet', help='Partial derivatives up to order B at a reduced point')
    point_args(p)
    p.add_argument('--B', type=int, default=1, help='Maximal order')
    p.add_argument('--tau-derivatives', action='store_true', help='Also output ∂θ/∂τ_jk (needs B >= 2)')
    p.add_argument('--jobs', type=int, default=1, help='Processes for the point evaluations')
    p.set_defaults(func=cmd_jet)

    p = sub.add_parser('tail-table', help='Old and new tail bounds at Im τ = I')
    p.add_argument('--blocks', type=block_list, default=[(2, 0), (6, 4)], help='Pairs g:p separated by ","')
    p.add_argument('--R-min', type=int, default=2)
    p.add_argument('--R-max', type=int, default=16)
    p.set_defaults(func=cmd_tail_table)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_INPUT if e.code else 0
    try:
        return args.func(args)
    except (SingularCocycle, NotPositiveDefinite) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DOMAIN
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except (PrecisionUnreachable, ThetaError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PRECISION


if __name__ == '__main__':
    sys.exit(main())
