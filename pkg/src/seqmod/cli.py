"""Command line entry points.

    seqmod prove FILE [options]     search for a proof of a problem file
    seqmod conformance THEORY       exercise a backend against the
                                    constraint-algebra laws

Exit codes for prove: 0 proved, 1 exhausted, 2 bad input, 3 resource
limit hit.  Conformance exits 0 when every law holds and 1 otherwise.
Set SEQMOD_LOG=debug (or info, warning) for progress logging on stderr.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from . import frontend, harness
from .kernel import IllFormed, SearchConfig
from .terms import DomainError, SortError

EXIT_PROVED = 0
EXIT_EXHAUSTED = 1
EXIT_INPUT = 2
EXIT_RESOURCE = 3


def _setup_logging() -> None:
    level = os.environ.get("SEQMOD_LOG", "").strip()
    if level:
        logging.basicConfig(
            stream=sys.stderr,
            level=getattr(logging, level.upper(), logging.INFO),
            format="%(name)s: %(message)s",
        )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="seqmod",
        description="proof search for quantified problems over constraint backends",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prove", help="search for a proof of a problem file")
    p.add_argument("file", help="problem file")
    p.add_argument("--calculus", choices=("di", "sdi"), default="sdi",
                   help="constraint-producing (di) or constraint-refining (sdi) search")
    p.add_argument("--theory", choices=("fol", "enum", "lra"), default="fol")
    p.add_argument("--order", choices=("left", "right", "random"), default="left",
                   help="which conjunct is explored first")
    p.add_argument("--seed", type=int, default=0, help="seed for --order random")
    p.add_argument("--max-exists", type=int, default=4,
                   help="expansion cap per existential occurrence")
    p.add_argument("--pulls", type=int, default=32,
                   help="closure attempts per leaf")
    p.add_argument("--nodes", type=int, default=10000,
                   help="total rule applications")
    p.add_argument("--depth", type=int, default=3,
                   help="ground term depth ceiling for the enum theory")
    p.add_argument("--check", action="store_true",
                   help="audit the proof and rebuild a ground instance")
    p.add_argument("--output", choices=("text", "json"), default="text")

    c = sub.add_parser("conformance", help="check a backend against the constraint laws")
    c.add_argument("theory", choices=("fol", "enum", "lra"))
    c.add_argument("--cases", type=int, default=200, help="cases per law")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--output", choices=("text", "json"), default="text")
    return parser


def _cmd_prove(args: argparse.Namespace) -> int:
    try:
        with open(args.file, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_INPUT
    name = os.path.splitext(os.path.basename(args.file))[0]
    cfg = SearchConfig(
        calculus=args.calculus,
        order=args.order,
        seed=args.seed,
        max_exists=args.max_exists,
        pulls=args.pulls,
        nodes=args.nodes,
    )
    try:
        problem = frontend.parse_problem(text, name)
        report = frontend.run(problem, args.theory, cfg, depth=args.depth,
                              check=args.check)
    except (frontend.ParseError, IllFormed, SortError, DomainError, ValueError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_INPUT
    print(report.to_json() if args.output == "json" else report.to_text())
    if report.check is not None and not (
            report.check["proof"] and report.check["reconstruction"]):
        print("warning: proof audit failed", file=sys.stderr)
    if report.outcome == "proved":
        return EXIT_PROVED
    if report.outcome == "exhausted":
        return EXIT_EXHAUSTED
    return EXIT_RESOURCE


def _cmd_conformance(args: argparse.Namespace) -> int:
    result = harness.run_conformance(args.theory, cases=args.cases, seed=args.seed)
    if args.output == "json":
        print(harness.report_json(result))
    else:
        print(harness.report_text(result))
    return 0 if result.ok else 1


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    if args.command == "prove":
        return _cmd_prove(args)
    return _cmd_conformance(args)


if __name__ == "__main__":
    sys.exit(main())
