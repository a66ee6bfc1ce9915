"""Command-line front end: ``stabilis decompose | verify | bound``.

Exit codes: 0 success, 1 verification failure, 2 no convergence,
3 violated hypothesis (critical exponent, divergent series, regime),
4 input/schema/I-O error, 64 usage error.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
import warnings
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .core import Direction, ExtractionConfig, NormSpec, PerturbationBound
from .errors import RegimeError, SchemaError, StabilisError
from .functions import parse_input
from .operators import MIXED_COEFFICIENT_SUM, check_equation, even_odd_split, pair_grid, verify_identity_suite
from .report_io import canonical_json, identity_report, plot_csv, report_to_dict
from .series import COR_3_12, corollary_constant, exact_constant_coefficient, pieces, select_direction, sum_pieces
from .stability import extract_all

EXIT_USAGE = 64
EXIT_VERIFY_FAILED = 1

PHI_HELP = ("envelope for the mixed residual: constant:EPS, power:THETA,P, or pointwise:EPS; "
            f"pointwise:EPS means |f - exact| <= EPS and becomes constant:{MIXED_COEFFICIENT_SUM}*EPS "
            "(the absolute coefficient sum of the mixed operator)")

SERIES_FLAGS = {
    "3.2": "cubic_3_2",
    "3.13": "quadratic_3_13",
    "3.23": "quartic_3_23",
    "3.29": "even_combined_3_29",
    "3.33": "full_3_33",
}
COROLLARY_FLAGS = {"cor3.6": "cor_3_6", "cor3.11": "cor_3_11", "cor3.12": "cor_3_12"}
_SERIES_KINDS = {"cubic_3_2": ("cubic",), "quadratic_3_13": ("quadratic",), "quartic_3_23": ("quartic",),
                 "even_combined_3_29": ("quadratic", "quartic"),
                 "full_3_33": ("quadratic", "cubic", "quartic")}


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def parse_phi(text: str, norm: NormSpec = NormSpec.MAX) -> PerturbationBound:
    kind, _, rest = text.partition(":")
    try:
        vals = [float(v) for v in rest.split(",")] if rest else []
    except ValueError as exc:
        raise SchemaError(f"bad number in --phi {text!r}") from exc
    if kind == "constant" and len(vals) == 1:
        return PerturbationBound.constant(vals[0])
    if kind == "pointwise" and len(vals) == 1:
        return PerturbationBound.constant(MIXED_COEFFICIENT_SUM * vals[0])
    if kind == "power" and len(vals) == 2:
        return PerturbationBound.power(vals[0], vals[1], norm)
    raise SchemaError(f"expected constant:EPS, power:THETA,P or pointwise:EPS, got {text!r}")


def _direction(text: str) -> Optional[Direction]:
    return None if text == "auto" else Direction(text)


def _positive(kind: type):
    def conv(text: str):
        try:
            v = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
        if not (math.isfinite(v) and v > 0):
            raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
        return v

    return conv


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="stabilis", description="Decompose approximate solutions of the mixed "
                "quadratic-cubic-quartic equation and certify the error.")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("decompose", help="extract Q1, C, Q2 and a certified error bound")
    d.add_argument("--input", required=True, help="poly:a,b,c or a function JSON file")
    d.add_argument("--phi", required=True, help=PHI_HELP)
    d.add_argument("--direction", default="auto", choices=("auto", "contraction", "dilation"))
    d.add_argument("--tol", type=_positive(float), default=1e-10, help="iterate gap tolerance")
    d.add_argument("--max-iter", type=_positive(int), default=40)
    d.add_argument("--norm", default="max", choices=("max", "euclidean"))
    d.add_argument("--grid-radius", type=_positive(float), default=2.0)
    d.add_argument("--grid-points", type=_positive(int), default=41)
    d.add_argument("--argument-cap", type=_positive(float), default=1e12)
    d.add_argument("--out", help="report JSON path (default: stdout)")
    d.add_argument("--plot", help="CSV with columns x, f, reconstruction, bound")

    v = sub.add_parser("verify", help="check an equation or the identity suite on a grid")
    v.add_argument("--input", required=True)
    v.add_argument("--equation", default="mixed",
                   choices=("mixed", "quadratic", "cubic", "quartic", "identities"))
    v.add_argument("--grid-radius", type=_positive(float), default=2.0)
    v.add_argument("--grid-points", type=_positive(int), default=21)
    v.add_argument("--tol", type=_positive(float), default=1e-9)
    v.add_argument("--out", help="optional JSON residual table")

    b = sub.add_parser("bound", help="evaluate a bound series or a closed-form corollary")
    b.add_argument("--phi", required=True, help=PHI_HELP)
    b.add_argument("--which", required=True, choices=tuple(SERIES_FLAGS) + tuple(COROLLARY_FLAGS))
    b.add_argument("--x", type=float, default=1.0, help="evaluation point (default 1)")
    b.add_argument("--terms", type=_positive(int), default=200)
    b.add_argument("--direction", default="auto", choices=("auto", "contraction", "dilation"))
    return p


def _write(path: Optional[str], text: str) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def cmd_decompose(args: argparse.Namespace) -> int:
    f = parse_input(args.input)
    phi = parse_phi(args.phi, NormSpec(args.norm))
    cfg = ExtractionConfig(direction=_direction(args.direction), max_iterations=args.max_iter,
                           tolerance=args.tol, norm=args.norm, argument_cap=args.argument_cap,
                           probe_radius=args.grid_radius, probe_points=args.grid_points)
    with warnings.catch_warnings(record=True):
        warnings.simplefilter("always")
        report = extract_all(f, phi, cfg)
    for note in report.warnings:
        print(f"warning: {note}", file=sys.stderr)
    source = f.spec if f.spec is not None else args.input
    _write(args.out, canonical_json(report_to_dict(report, source)))
    if args.plot:
        Path(args.plot).write_text(plot_csv(f, report))
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    f = parse_input(args.input)
    X, Y = pair_grid(args.grid_radius, args.grid_points, f.dim_in)
    if args.equation == "identities":
        f_e, f_o = even_odd_split(f)
        checks = verify_identity_suite(f_e, f_o, X, Y, args.tol)
    else:
        checks = [check_equation(f, args.equation, X, Y, args.tol)]
    for c in checks:
        status = "ok" if c.passed else "FAIL"
        print(f"{c.name:>10}  max|res| {c.max_residual:.3e}  max|res|/scale {c.max_normalized:.3e}  {status}")
    if args.out:
        Path(args.out).write_text(canonical_json(identity_report(checks, args.tol)))
    failed = [c for c in checks if not c.passed]
    if failed:
        worst = max(failed, key=lambda c: c.max_normalized)
        print(f"worst offender: {worst.name} at x={worst.argmax[0]}, y={worst.argmax[1]} "
              f"(|res|/scale {worst.max_normalized:.3e} > tol {args.tol:g})")
        return EXIT_VERIFY_FAILED
    return 0


def _auto_direction(which: str, phi: PerturbationBound) -> Direction:
    dirs = {select_direction(phi, k) for k in _SERIES_KINDS[which]}
    if len(dirs) != 1:
        raise RegimeError(f"no single direction sums every component of {which} for this envelope; "
                          "pass --direction explicitly")
    return dirs.pop()


def cmd_bound(args: argparse.Namespace) -> int:
    phi = parse_phi(args.phi)
    x = np.array([args.x])
    if args.which in SERIES_FLAGS:
        which = SERIES_FLAGS[args.which]
        direction = _direction(args.direction) or _auto_direction(which, phi)
        partial, tail = sum_pieces(pieces(which, direction), phi, x, args.terms)
        print(f"series: {which} ({direction.value})")
        print(f"partial_sum: {partial:.17g}")
        print(f"tail_majorant: {tail:.17g}")
        print(f"bound: {partial + tail:.17g}")
        return 0

    cor = COROLLARY_FLAGS[args.which]
    direction = _direction(args.direction) or {"cor_3_6": Direction.CONTRACTION}.get(cor, Direction.DILATION)
    if cor == "cor_3_12":
        if phi.growth_exponent is not None:
            raise RegimeError("cor3.12 is the bounded-envelope case; use --phi constant:EPS")
        eps = phi.epsilon
        partial, tail = sum_pieces(pieces("full_3_33", direction), phi, x, args.terms)
        exact = exact_constant_coefficient("full_3_33", direction)
        print(f"series: full_3_33 ({direction.value})")
        print(f"partial_sum: {partial:.17g}")
        print(f"tail_majorant: {tail:.17g}")
        print(f"bound: {partial + tail:.17g}")
        print(f"exact_coefficient: {exact} = {float(exact):.17g}")
        print(f"reference_coefficient: {COR_3_12} = {float(COR_3_12):.17g}")
        print(f"exact_bound: {float(exact) * eps:.17g}")
        print(f"reference_bound: {float(COR_3_12) * eps:.17g}")
        return 0

    if phi.kind != "power":
        raise RegimeError(f"{args.which} is stated for power envelopes; use --phi power:THETA,P")
    coef = corollary_constant(cor, phi.theta, phi.p)
    scale = phi.theta * abs(args.x) ** phi.p
    partial, tail = sum_pieces(pieces("full_3_33", direction), phi, x, args.terms)
    total = partial + tail
    print(f"series: full_3_33 ({direction.value})")
    closed = coef * scale
    print(f"partial_sum: {partial:.17g}")
    print(f"tail_majorant: {tail:.17g}")
    print(f"bound: {total:.17g}")
    print(f"closed_form_coefficient: {coef:.17g}")
    print(f"closed_form_bound: {closed:.17g}")
    rel = abs(total - closed) / abs(closed) if closed else abs(total)
    print(f"relative_difference: {rel:.3e}")
    return 0


COMMANDS = {"decompose": cmd_decompose, "verify": cmd_verify, "bound": cmd_bound}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except StabilisError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except ValueError as exc:
        # flag values that pass argparse but fail validation downstream
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def run() -> None:
    sys.exit(main())
