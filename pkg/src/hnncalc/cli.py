"""``hnn`` command-line front end.

Exit status: 0 on success, 1 when a check reports failures, 2 on input errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Sequence

from .algebra import NotAnExpectation, NotInDomain, format_element
from .checks import (
    NotUnitary,
    check_confluence,
    check_full_hypothesis,
    check_haar,
    check_trace_hypothesis,
    oracle_compare,
)
from .config import ConfigError, load_scenario
from .engine import (
    TermCapExceeded,
    UnsupportedBackend,
    expect_onto_base,
    format_hnn,
    modular_apply,
    normalize,
    state_moment,
)
from .expr import ExpressionError, parse_and_evaluate

INPUT_ERRORS = (
    ConfigError,
    ExpressionError,
    NotUnitary,
    UnsupportedBackend,
    NotAnExpectation,
    NotInDomain,
    TermCapExceeded,
    FileNotFoundError,
)


def format_scalar(z: complex) -> str:
    z = complex(z)
    re = float(f"{z.real:.12g}") + 0.0
    im = float(f"{z.imag:.12g}") + 0.0
    if im == 0:
        return repr(re)
    return f"{re!r}{'+' if im > 0 else '-'}{abs(im)!r}i"


def _scalar_json(z: complex) -> list[float]:
    return [complex(z).real, complex(z).imag]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", required=True, help="scenario JSON file")
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument("--seed", type=int, default=None, help="override the scenario seed")

    parser = argparse.ArgumentParser(prog="hnn", description="HNN-extension word calculus")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, helptext in (
        ("normalize", "print the reduced-sum form"),
        ("expect", "print E^M_N(x) as a base element"),
        ("moment", "print phi(E_D(E^M_N(x)))"),
    ):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("--expr", required=True)
        if name == "normalize":
            p.add_argument("--order", choices=("ltr", "rtl"), default="ltr")

    p = sub.add_parser("sigma", parents=[common], help="apply the modular automorphism at time t")
    p.add_argument("--expr", required=True)
    p.add_argument("--t", type=float, required=True)

    p = sub.add_parser("check", parents=[common], help="run a verification")
    p.add_argument("which", choices=("trace", "haar", "oracle", "full-hypothesis", "confluence"))
    p.add_argument("--max-len", type=int, default=6)
    p.add_argument("--n-max", type=int, default=10)
    p.add_argument("--theta", type=int, default=1, help="stable letter index (1-based)")
    p.add_argument("--v", default=None, help="unitary base element for full-hypothesis")
    p.add_argument("--samples", type=int, default=100)
    return parser


def _run(args) -> tuple[object, list[str], int, list[str]]:
    """Return (json result, text lines, exit status, diagnostics)."""
    s = load_scenario(args.scenario)
    if args.seed is not None:
        s.seed = args.seed
    diagnostics: list[str] = []

    if args.command == "normalize":
        x = normalize(parse_and_evaluate(args.expr, s), args.order)
        text = format_hnn(x)
        return {"element": text, "words": len(x.words)}, [text], 0, diagnostics
    if args.command == "expect":
        e = expect_onto_base(parse_and_evaluate(args.expr, s))
        text = format_element(e)
        return {"element": text}, [text], 0, diagnostics
    if args.command == "moment":
        m = state_moment(parse_and_evaluate(args.expr, s))
        return _scalar_json(m), [format_scalar(m)], 0, diagnostics
    if args.command == "sigma":
        y = modular_apply(parse_and_evaluate(args.expr, s), args.t)
        text = format_hnn(y)
        return {"element": text, "t": args.t}, [text], 0, diagnostics

    which = args.which
    if which == "trace":
        report = check_trace_hypothesis(s, samples=args.samples)
    elif which == "haar":
        report = check_haar(s, theta=args.theta - 1, n_max=args.n_max, max_len=args.max_len)
    elif which == "oracle":
        report = oracle_compare(s, max_len=args.max_len)
    elif which == "full-hypothesis":
        if args.v is None:
            raise ExpressionError("full-hypothesis needs --v")
        v = _base_element(args.v, s)
        report = check_full_hypothesis(s, v, n_max=args.n_max)
    else:
        report = check_confluence(s)
    lines = list(report.failures)
    if which == "oracle":
        lines.append(f"{report.details['mismatches']} mismatches / {report.details['words']} words")
    lines.append(report.summary())
    details = json.loads(json.dumps(report.details, default=str))
    result = {"passed": report.passed, "failures": report.failures, "details": details}
    return result, lines, 0 if report.passed else 1, diagnostics


def _base_element(src: str, s):
    x = parse_and_evaluate(src, s)
    if any(w.length for w in x.words):
        raise ExpressionError("--v must be a base-algebra element (no stable letters)")
    total = s.base.zero()
    for w in x.words:
        total = total + w.coeffs[0]
    return total


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    command = args.command if args.command != "check" else f"check {args.which}"
    try:
        result, lines, status, diagnostics = _run(args)
    except INPUT_ERRORS as exc:
        msg = f"error: {exc}"
        if args.format == "json":
            print(json.dumps({"command": command, "scenario": args.scenario, "result": None, "diagnostics": [msg]}))
        print(msg, file=sys.stderr)
        return 2
    if args.format == "json":
        print(
            json.dumps(
                {"command": command, "scenario": args.scenario, "result": result, "diagnostics": diagnostics},
                sort_keys=True,
            )
        )
    else:
        for d in diagnostics:
            print(d, file=sys.stderr)
        print("\n".join(lines))
    return status


if __name__ == "__main__":
    sys.exit(main())
