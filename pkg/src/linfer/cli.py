"""Command-line interface.

``linfer check FILE`` typechecks a source file and prints one line per
binding with its inferred (or declared) scheme in canonical form.

Flags:

* ``--dump-constraints`` also prints the constraints generated for each
  binding, before solving.
* ``--no-elim`` disables quantifier elimination, so schemes keep the
  multiplicity variables that elimination would have removed.
* ``--oracle-check`` cross-checks every entailment and elimination against a
  brute-force truth-table oracle while solving, and re-checks each accepted
  derivation against the declarative rules afterwards.  Slow; for debugging
  the checker, not programs.

Exit status: 0 on success, 1 if the program fails to parse or check, 2 for
usage errors such as an unreadable file.
"""

from __future__ import annotations

import argparse
import sys
from contextlib import nullcontext

from .checker import check_program
from .diagnostics import LinError
from .predicates import oracle_mode
from .replay import replay_program
from .syntax import parse_program, show_scheme


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="linfer",
        description="Typechecker for a small linear functional language "
                    "with multiplicity-annotated arrows.")
    sub = parser.add_subparsers(dest="command", required=True)
    check = sub.add_parser(
        "check", help="typecheck a file and print the scheme of each binding")
    check.add_argument("file", help="source file to check")
    check.add_argument("--dump-constraints", action="store_true",
                       help="print the constraints generated for each binding")
    check.add_argument("--no-elim", action="store_true",
                       help="keep residual multiplicity variables instead of "
                            "eliminating them")
    check.add_argument("--oracle-check", action="store_true",
                       help="cross-check the solver against brute-force "
                            "oracles and re-check derivations declaratively")
    args = parser.parse_args(argv)
    return _cmd_check(args)


def _cmd_check(args: argparse.Namespace) -> int:
    try:
        with open(args.file, encoding="utf-8") as handle:
            source = handle.read()
    except OSError as e:
        print(f"linfer: cannot read '{args.file}': {e.strerror}", file=sys.stderr)
        return 2

    try:
        program = parse_program(source)
        with oracle_mode() if args.oracle_check else nullcontext():
            report = check_program(program, no_elim=args.no_elim)
            if args.oracle_check:
                replay_program(report)
    except LinError as e:
        print(e.render(args.file), file=sys.stderr)
        return 1

    for b in report.bindings:
        if args.dump_constraints:
            print(f"-- constraints for '{b.name}':")
            for line in b.constraints_text.splitlines():
                print(f"--   {line}")
        print(f"{b.name} : {show_scheme(b.scheme)}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
