"""Command-line front end.

Exit codes: 0 success, 1 semantic negative (inequality violated at a
vertex, property check failed), 2 usage or I/O error, 3 no proof found.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import catalog, proof
from .checks import SUITES, run_suite
from .expr import ExpressionError, Form, gen_ikk, to_algebraic_form
from .lhv import EnumerationGuardError, vertex_max
from .optimize import ALT_HEADER, TABLE_HEADER, ConfigError, OptimizerConfig, table_row

EXIT_OK, EXIT_NEGATIVE, EXIT_USAGE, EXIT_NOT_FOUND = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _entry(path, name) -> catalog.CatalogEntry:
    try:
        entries = catalog.load(path)
    except OSError as exc:
        raise UsageError(f"cannot read catalog {path}: {exc}") from exc
    except catalog.CatalogError as exc:
        raise UsageError(str(exc)) from exc
    try:
        return catalog.find(entries, name)
    except KeyError:
        raise UsageError(f"no entry named {name!r} in {path}") from None


def _algebraic(expr):
    return to_algebraic_form(expr) if expr.form_tag is Form.PROBABILITY else expr


def _write(path, text: str) -> None:
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc}") from exc


def cmd_gen(args) -> int:
    if args.k < 2:
        raise UsageError(f"--k must be at least 2, got {args.k}")
    entry = catalog.CatalogEntry(f"I{args.k}{args.k}", gen_ikk(args.k), f"gen_ikk({args.k})")
    text = catalog.dumps([entry])
    if args.out:
        _write(args.out, text)
        print(f"wrote {entry.name} to {args.out}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_verify(args) -> int:
    entry = _entry(args.catalog, args.name)
    try:
        value, strategy = vertex_max(_algebraic(entry.expr))
    except EnumerationGuardError as exc:
        raise UsageError(str(exc)) from exc
    if value <= 0:
        print(f"{entry.name}: max {value} at {strategy}; valid, local bound {value}")
        return EXIT_OK
    print(f"{entry.name}: max {value} at {strategy}; violated")
    return EXIT_NEGATIVE


def cmd_prove(args) -> int:
    entry = _entry(args.catalog, args.name)
    cert = proof.search(_algebraic(entry.expr))
    if cert is None:
        print(f"{entry.name}: no certificate found")
        return EXIT_NOT_FOUND
    _write(args.out, proof.dumps(cert))
    first = "leaf" if isinstance(cert, proof.Leaf) else (
        f"split {cert.party.value.lower()}{cert.index + 1} on pivot {proof.format_pivot(cert.pivot)}")
    print(f"{entry.name}: certificate depth {proof.depth(cert)}, {len(proof.leaves(cert))} leaves, "
          f"root {first}; written to {args.out}")
    return EXIT_OK


def cmd_table(args) -> int:
    try:
        config = OptimizerConfig.load(args.config) if args.config else OptimizerConfig()
    except ConfigError as exc:
        raise UsageError(str(exc)) from exc
    try:
        entries = catalog.load(args.catalog)
    except OSError as exc:
        raise UsageError(f"cannot read catalog {args.catalog}: {exc}") from exc
    except catalog.CatalogError as exc:
        raise UsageError(str(exc)) from exc
    with_alt = not args.no_alternatives
    header = TABLE_HEADER + (ALT_HEADER if with_alt else [])
    lines = ["\t".join(header)]
    for e in entries:
        row = table_row(e.expr, with_alt, config, name=e.name)
        lines.append("\t".join(row.cells(with_alt)))
    text = "\n".join(lines) + "\n"
    if args.out:
        _write(args.out, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_check(args) -> int:
    if args.trials < 1:
        raise UsageError("--trials must be at least 1")
    report = run_suite(args.suite, args.trials, args.seed)
    print(report.summary())
    return EXIT_OK if report.ok else EXIT_NEGATIVE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bellforge", description="Bell-CH inequality toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write the k-setting family member as a catalog entry")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("verify", help="exact local bound by vertex enumeration")
    p.add_argument("--catalog", required=True)
    p.add_argument("--name", required=True)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("prove", help="search for a split/positivity certificate")
    p.add_argument("--catalog", required=True)
    p.add_argument("--name", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_prove)

    p = sub.add_parser("table", help="maximum quantum violations as a tab-separated report")
    p.add_argument("--catalog", required=True)
    p.add_argument("--config")
    p.add_argument("--out")
    p.add_argument("--no-alternatives", action="store_true")
    p.set_defaults(func=cmd_table)

    p = sub.add_parser("check", help="randomized property suites")
    p.add_argument("--suite", required=True, type=str.upper, choices=SUITES)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ExpressionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
