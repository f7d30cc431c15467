"""Command-line entry point: ``bellcast <command> [options]``.

Exit codes: 0 success, 1 user or parse error, 2 unsupported model/scenario
combination, 3 verification failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from .expressions import ExpressionError, builtin, evaluate, expression_from
from .lp import LPError
from .optimize import SearchConfig, default_grid, maximize, sweep
from .polytopes import ModelClass, UnsupportedModelError, bound, membership
from .quantum import broadcast_reproduction, ghz_paper_correlation
from .scenario import Behavior, ScenarioError
from .verify import run_paper_suite

EXIT_OK, EXIT_USER, EXIT_UNSUPPORTED, EXIT_VERIFY = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _angle(text: str) -> float:
    """Float, or an expression in ``pi`` such as ``pi/4``."""
    try:
        return float(text)
    except ValueError:
        pass
    if not set(text) <= set("0123456789.+-*/pi() e"):
        raise argparse.ArgumentTypeError(f"invalid angle {text!r}")
    try:
        return float(eval(text, {"__builtins__": {}}, {"pi": math.pi}))  # noqa: S307
    except Exception:
        raise argparse.ArgumentTypeError(f"invalid angle {text!r}") from None


def _grid(text: str):
    if "," in text:
        return sorted(_angle(x) for x in text.split(",") if x.strip())
    try:
        return default_grid(int(text)).tolist()
    except ValueError:
        raise argparse.ArgumentTypeError(f"--grid takes a point count or a comma list, got {text!r}") from None


def _model(text: str) -> ModelClass:
    try:
        return ModelClass.parse(text)
    except UnsupportedModelError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="bellcast", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    b = sub.add_parser("bounds", help="exact maximum of an expression over a correlation class")
    b.add_argument("--ineq", required=True, help="built-in name (S3, Sprime, I, R3, RN, T, B, Mermin3) or expression text")
    b.add_argument("--model", required=True, type=_model, help="Local, BL, TOBL, NSBL, BC1, BC1[k], OneWay(i,j)")
    b.add_argument("--n", type=int, help="number of parties (default: the expression's own)")
    b.add_argument("--out", type=Path, help="write the maximizing vertex as behavior JSON")

    m = sub.add_parser("membership", help="LP membership test of a behavior in a class")
    m.add_argument("--behavior", required=True, type=Path)
    m.add_argument("--model", required=True, type=_model)
    m.add_argument("--tol", type=float, default=1e-7)
    m.add_argument("--json", type=Path, help="write weights or certificate as JSON")
    m.add_argument("--ineq", help="also evaluate this expression on the behavior")

    q = sub.add_parser("qmax", help="maximize an expression over measurements on a GHZ-like state")
    q.add_argument("--ineq", required=True)
    q.add_argument("--n", type=int, default=3)
    q.add_argument("--t", type=_angle, default=math.pi / 4)
    q.add_argument("--restarts", type=int, default=64)
    q.add_argument("--seed", type=int, default=1)
    q.add_argument("--mode", choices=("paper_parametrization", "general_per_party"), default="paper_parametrization")
    q.add_argument("--json", type=Path)

    s = sub.add_parser("sweep", help="maximize over a grid of state angles t, CSV output")
    s.add_argument("--ineq", default="RN")
    s.add_argument("--n", type=int, default=3)
    s.add_argument("--grid", type=_grid, default=default_grid().tolist(), help="point count or comma list (default 50)")
    s.add_argument("--restarts", type=int, default=8, help="fresh restarts per grid point")
    s.add_argument("--seed", type=int, default=1)
    s.add_argument("--mode", choices=("paper_parametrization", "general_per_party"), default="paper_parametrization")
    s.add_argument("--out", type=Path, help="CSV path (default stdout)")

    g = sub.add_parser("ghz-anonymity", help="broadcast reproduction of the GHZ correlation")
    g.add_argument("--n", type=int, required=True)

    v = sub.add_parser("verify", help="run the reproduction suite")
    v.add_argument("--suite", choices=("paper",), default="paper")
    v.add_argument("--seed", type=int, default=1)
    v.add_argument("--json", type=Path)
    v.add_argument("--grid", type=int, default=50, help="sweep points per party count")
    v.add_argument("--restarts", type=int, default=4, help="fresh restarts per sweep point")
    return p


def cmd_bounds(args) -> int:
    expr = expression_from(args.ineq, args.n)
    value, witness = bound(expr, args.model)
    print(f"{value:.12f}")
    if args.out:
        witness.save(args.out)
    return EXIT_OK


def cmd_membership(args) -> int:
    behavior = Behavior.load(args.behavior)
    res = membership(behavior, args.model, args.tol)
    if res.member:
        print(f"member of {args.model}: {len(res.weights)} vertices, reconstruction error {res.reconstruction_error:.3e}")
    else:
        print(f"not a member of {args.model}: separating functional with gap {res.gap:.12f}")
    if args.ineq:
        expr = expression_from(args.ineq, behavior.n)
        value = evaluate(expr, behavior)
        limit, _ = bound(expr, args.model)
        print(f"{expr.name} = {value:.12f} (class bound {limit:.12f})")
    if args.json:
        out = res.to_dict()
        out["model"] = str(args.model)
        args.json.write_text(json.dumps(out, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_qmax(args) -> int:
    expr = expression_from(args.ineq, args.n)
    config = SearchConfig(restarts=args.restarts, seed=args.seed, mode=args.mode)
    print(f"# {expr.name} n={args.n} t={args.t:.12g} restarts={args.restarts} seed={args.seed} mode={args.mode}")
    value, params = maximize(expr, args.n, args.t, config)
    print(f"{value:.12f}")
    params_dict = params.reduced().to_dict() if hasattr(params, "reduced") else params.to_dict()
    print(json.dumps(params_dict))
    if args.json:
        args.json.write_text(json.dumps({"expression": expr.name, "n": args.n, "t": args.t, "seed": args.seed,
                                         "restarts": args.restarts, "mode": args.mode, "value": value,
                                         "params": params_dict}, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_sweep(args) -> int:
    expr = expression_from(args.ineq, args.n)
    config = SearchConfig(restarts=args.restarts, seed=args.seed, mode=args.mode)
    print(f"# {expr.name} n={args.n} points={len(args.grid)} restarts={args.restarts} seed={args.seed}",
          file=sys.stderr)
    curve = sweep(expr, args.n, args.grid, config)
    text = curve.to_csv()
    if args.out:
        args.out.write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_ghz_anonymity(args) -> int:
    n = args.n
    if not 3 <= n <= 8:
        raise UsageError(f"--n must be between 3 and 8, got {n}")
    ok = True
    ghz = ghz_paper_correlation(n)
    diff = float(abs(broadcast_reproduction(n).table - ghz.table).max())
    passed = diff <= 1e-12
    ok &= passed
    print(f"(i)   (n-2)-broadcast model reproduces the GHZ correlation: max |diff| = {diff:.3e}  "
          f"{'PASS' if passed else 'FAIL'}")
    if n == 3:
        value = evaluate(builtin("Mermin3"), ghz)
        passed = abs(value - 4.0) <= 1e-12 and value > 2.0
        ok &= passed
        print(f"(ii)  Mermin3 = {value:.12f} > 2 (local bound): {'PASS' if passed else 'FAIL'}")
        for j in range(3):
            res = membership(ghz, ModelClass("BC1", first=j))
            ok &= res.member
            print(f"(iii) member of BC1 with party {j + 1} broadcasting first: {'PASS' if res.member else 'FAIL'}")
    else:
        print("(ii)  Mermin3 check only defined for n = 3: skipped")
        print("(iii) membership checks only run for n = 3: skipped")
    return EXIT_OK if ok else EXIT_USER


def cmd_verify(args) -> int:
    report = run_paper_suite(args.seed, sweep_points=args.grid, sweep_restarts=args.restarts,
                             progress=lambda msg: print(f"... {msg}", file=sys.stderr, flush=True))
    print(report.table())
    if args.json:
        args.json.write_text(report.to_json())
    return EXIT_OK if report.passed else EXIT_VERIFY


COMMANDS = {
    "bounds": cmd_bounds,
    "membership": cmd_membership,
    "qmax": cmd_qmax,
    "sweep": cmd_sweep,
    "ghz-anonymity": cmd_ghz_anonymity,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USER
    except UnsupportedModelError as exc:
        print(f"unsupported: {exc}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    except (ExpressionError, ScenarioError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USER
    except LPError as exc:
        print(f"LP failure: {exc}", file=sys.stderr)
        return EXIT_UNSUPPORTED


if __name__ == "__main__":
    sys.exit(main())
