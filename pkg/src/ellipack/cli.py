"""Command-line front end.

Subcommands parse ellipsoid and scalar expressions, dispatch to the library,
and emit deterministic JSON (or CSV for capacity dumps) on stdout.  All
machine-readable numbers are exact; approximate decimals appear only in
--pretty output and are marked as such.

Exit codes are a stable contract:
  0 embeds / success          3 hypothesis or threshold failure
  1 obstructed                4 usage or parse error
  2 inconclusive              5 precision exhaustion
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
from typing import List, Optional, Sequence

from . import __version__
from .decide4d import Outcome, decide
from .ech import Ellipsoid, cap_sequence, caps_csv, lattice_count, \
    parabola_lower, parabola_upper
from .planner import (
    CertificateError,
    HypothesisFailure,
    VolumeObstruction,
    certificate_from_json,
    main_chain,
    pack_balls_step,
    pack_ellipsoids_step,
    verify_certificate,
)
from .radicals import Radical, parse_scalar
from .scalar import (
    DEFAULT_PRECISION,
    DomainError,
    Precision,
    PrecisionExhausted,
    ScalarParseError,
    rat_parse,
)
from .stability import ThresholdFailure, nstab_cpn, nstab_hnd

EXIT_EMBEDS = 0
EXIT_OBSTRUCTED = 1
EXIT_INCONCLUSIVE = 2
EXIT_HYPOTHESIS = 3
EXIT_USAGE = 4
EXIT_PRECISION = 5

_MAX_PRECISION_ENV = "ELLIPACK_MAX_PRECISION"


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise _UsageError(message)


_ELLIPSOID_RE = re.compile(r"\s*(E|B)\s*\((.*)\)\s*\Z", re.S)


def parse_ellipsoid_expr(text: str) -> Ellipsoid:
    """Parse "E(s1,...,sn)" or "B(s)"; each s in the scalar grammar."""
    m = _ELLIPSOID_RE.match(text)
    if m is None:
        raise ScalarParseError(f"not an ellipsoid expression: {text!r}")
    kind, body = m.group(1), m.group(2)
    parts = body.split(",")
    if kind == "B":
        if len(parts) != 1:
            raise ScalarParseError("a ball takes exactly one capacity")
        s = parse_scalar(parts[0])
        return Ellipsoid([s, s])
    return Ellipsoid([parse_scalar(p) for p in parts])


def _context(args: argparse.Namespace) -> Precision:
    start = getattr(args, "precision", None) or DEFAULT_PRECISION.start
    cap = DEFAULT_PRECISION.cap
    env = os.environ.get(_MAX_PRECISION_ENV)
    if env is not None:
        try:
            cap = int(env)
        except ValueError:
            raise ScalarParseError(
                f"{_MAX_PRECISION_ENV} must be an integer, got {env!r}")
    return Precision(start, max(cap, start))


def _emit(doc: dict, pretty_lines: Optional[List[str]], args) -> None:
    if getattr(args, "pretty", False) and pretty_lines is not None:
        for line in pretty_lines:
            print(line)
    else:
        print(json.dumps(doc, indent=2))


def _approx(value) -> str:
    """Six significant digits, explicitly marked approximate."""
    if isinstance(value, Radical):
        value = value.eval(64)
        value = (value.lo + value.hi) / 2
    return f"~{float(value):.6g}"


# ---------------------------------------------------------------------------
# Subcommands

def _cmd_caps(args) -> int:
    a, b = rat_parse(args.a), rat_parse(args.b)
    if args.terms < 1:
        raise DomainError("--terms must be positive")
    seq = cap_sequence(min(a, b), max(a, b), args.terms - 1)
    if args.csv:
        sys.stdout.write(caps_csv(seq, args.terms))
        return EXIT_EMBEDS
    values = [str(v) for v in seq.prefix(args.terms)]
    doc = {"a": str(seq.a), "b": str(seq.b), "terms": args.terms,
           "values": values}
    _emit(doc, [f"N({seq.a},{seq.b})(0..{args.terms - 1}) = " + ", ".join(values)],
          args)
    return EXIT_EMBEDS


def _cmd_count(args) -> int:
    a, b, y = rat_parse(args.a), rat_parse(args.b), rat_parse(args.y)
    count = lattice_count(a, b, y)
    _emit({"a": str(a), "b": str(b), "y": str(y), "count": count},
          [f"R({a},{b})({y}) = {count}"], args)
    return EXIT_EMBEDS


def _cmd_bounds(args) -> int:
    a, b, y = rat_parse(args.a), rat_parse(args.b), rat_parse(args.y)
    a, b = min(a, b), max(a, b)
    lower, upper = parabola_lower(a, b, y), parabola_upper(a, b, y)
    count = lattice_count(a, b, y)
    doc = {"a": str(a), "b": str(b), "y": str(y),
           "lower": str(lower), "count": count, "upper": str(upper)}
    _emit(doc, [f"{lower} <= R({a},{b})({y}) = {count} <= {upper}",
                f"({_approx(lower)} / {count} / {_approx(upper)})"], args)
    return EXIT_EMBEDS


def _cmd_decide(args) -> int:
    domain = parse_ellipsoid_expr(args.domain)
    target = parse_ellipsoid_expr(args.target)
    decision = decide(domain, target, args.max_terms, _context(args))
    doc = decision.as_json()
    pretty = []
    if decision.outcome is Outcome.EMBEDS:
        pretty.append(f"embeds via {decision.justification.rule.value}")
        code = EXIT_EMBEDS
    elif decision.outcome is Outcome.OBSTRUCTED:
        w = decision.witness
        pretty.append(f"obstructed at k={w.k}: {w.domain_value} > {w.target_value}")
        code = EXIT_OBSTRUCTED
    else:
        pretty.append(f"inconclusive: no violation among the first "
                      f"{decision.verified_terms} terms")
        code = EXIT_INCONCLUSIVE
    _emit(doc, pretty, args)
    return code


def _cmd_plan(args) -> int:
    if args.verify is not None:
        if args.domain or args.target:
            raise _UsageError("--verify takes no ellipsoid arguments")
        with open(args.verify, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        cert = certificate_from_json(doc)
        checks = verify_certificate(cert, _context(args))
        _emit({"verified": True, "steps": len(cert.steps), "checks": len(checks)},
              [f"certificate verified: {len(cert.steps)} steps, "
               f"{len(checks)} checks"], args)
        return EXIT_EMBEDS
    if not (args.domain and args.target):
        raise _UsageError("plan needs DOMAIN and TARGET (or --verify FILE)")
    domain = parse_ellipsoid_expr(args.domain)
    target = parse_ellipsoid_expr(args.target)
    cert = main_chain(domain, target, _context(args),
                      skip_thinness_gate=args.skip_thinness_gate)
    pretty = [f"{len(cert.steps)} steps: {cert.source} -> {cert.target}"]
    for step in cert.steps:
        tag = f" on factors {step.pair}" if step.pair is not None else ""
        pretty.append(f"  {step.rule.rule.value}{tag}: -> {step.target}")
    _emit(cert.as_json(), pretty, args)
    return EXIT_EMBEDS


def _cmd_pack(args) -> int:
    if args.shape == "balls":
        target = parse_ellipsoid_expr(args.into)
        step = pack_balls_step(args.count, target.n, _context(args))
        if step.target != target:
            raise DomainError(
                f"--into must equal {step.target}; got {target}")
    else:
        shape = parse_ellipsoid_expr(args.ellipsoid)
        step = pack_ellipsoids_step(shape, args.count, _context(args))
    doc = step.as_json()
    _emit(doc, [f"{step.copies} x {step.source} -> {step.target} "
                f"({step.rule.rule.value})"], args)
    return EXIT_EMBEDS


def _load_exceptions(path: Optional[str]):
    if path is None:
        return None
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    table = []
    for entry in raw:
        lo, hi = entry
        table.append((rat_parse(str(lo)), rat_parse(str(hi))))
    return table


def _cmd_stab(args) -> int:
    ctx = _context(args)
    if args.manifold == "cpn":
        report = nstab_cpn(args.n, _load_exceptions(args.exceptions),
                           args.chain, ctx)
    else:
        report = nstab_hnd(args.n, args.d, args.chain, ctx)
    pretty = [f"stability bound: {report.bound}",
              f"certified checks: {len(report.checks)}"]
    if report.chain is not None:
        pretty.append(f"chain sample at k={args.chain}: "
                      f"{len(report.chain.steps)} steps")
    _emit(report.as_json(), pretty, args)
    return EXIT_EMBEDS


# ---------------------------------------------------------------------------
# Parser assembly

def build_parser() -> _Parser:
    parser = _Parser(prog="ellipack",
                     description="exact ellipsoid embedding toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--pretty", action="store_true",
                       help="human-readable output (approximate decimals)")
        p.add_argument("--precision", type=int, default=None,
                       help="starting precision in bits (default 64)")

    p = sub.add_parser("caps", help="capacity sequence of E(a,b)")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--terms", type=int, default=20)
    p.add_argument("--csv", action="store_true", help="emit CSV")
    common(p)
    p.set_defaults(func=_cmd_caps)

    p = sub.add_parser("count", help="lattice count R(a,b)(y)")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("y")
    common(p)
    p.set_defaults(func=_cmd_count)

    p = sub.add_parser("bounds", help="quadratic bounds around the count")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("y")
    common(p)
    p.set_defaults(func=_cmd_bounds)

    p = sub.add_parser("decide", help="decide a 4D ellipsoid embedding")
    p.add_argument("domain")
    p.add_argument("target")
    p.add_argument("--max-terms", type=int, default=100_000)
    common(p)
    p.set_defaults(func=_cmd_decide)

    p = sub.add_parser("plan", help="build or verify an embedding certificate")
    p.add_argument("domain", nargs="?")
    p.add_argument("target", nargs="?")
    p.add_argument("--verify", metavar="FILE",
                   help="re-verify a certificate JSON file")
    p.add_argument("--skip-thinness-gate", action="store_true",
                   help="bypass the threshold gate (experimentation only)")
    common(p)
    p.set_defaults(func=_cmd_plan)

    p = sub.add_parser("pack", help="packing reduction steps")
    packs = p.add_subparsers(dest="shape", required=True)
    pb = packs.add_parser("balls", help="k disjoint unit balls")
    pb.add_argument("count", type=int)
    pb.add_argument("--into", required=True,
                    help="target ellipsoid, must equal E(1,...,1,k)")
    common(pb)
    pb.set_defaults(func=_cmd_pack, shape="balls")
    pe = packs.add_parser("ellipsoid", help="k disjoint copies of an ellipsoid")
    pe.add_argument("ellipsoid")
    pe.add_argument("count", type=int)
    common(pe)
    pe.set_defaults(func=_cmd_pack, shape="ellipsoid")

    p = sub.add_parser("stab", help="packing-stability bounds")
    stabs = p.add_subparsers(dest="manifold", required=True)
    pc = stabs.add_parser("cpn", help="complex projective space")
    pc.add_argument("n", type=int)
    pc.add_argument("--chain", type=int, default=None,
                    help="include a chain certificate at this packing number")
    pc.add_argument("--exceptions", metavar="FILE", default=None,
                    help="JSON table of excluded ratio intervals")
    common(pc)
    pc.set_defaults(func=_cmd_stab, manifold="cpn")
    ph = stabs.add_parser("hyp", help="degree-d hypersurface")
    ph.add_argument("n", type=int)
    ph.add_argument("d", type=int)
    ph.add_argument("--chain", type=int, default=None)
    common(ph)
    ph.set_defaults(func=_cmd_stab, manifold="hyp")

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    print(f"ellipack {__version__}", file=sys.stderr)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        return args.func(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ScalarParseError, json.JSONDecodeError, FileNotFoundError) as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PrecisionExhausted as exc:
        print(f"precision exhausted: {exc}", file=sys.stderr)
        return EXIT_PRECISION
    except (VolumeObstruction, HypothesisFailure, ThresholdFailure,
            CertificateError) as exc:
        print(f"hypothesis failure: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except DomainError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
