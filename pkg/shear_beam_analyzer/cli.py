import argparse
import logging
import sys
from typing import List, Optional

from .config import EXIT_OK, EXIT_SOLVER, EXIT_VALIDATION, LOG_LEVEL
from .components.bench_cli.cases import CASES, build_case
from .components.bench_cli.tools import (
    REFERENCE_TABLES,
    cmd_buckle,
    cmd_converge,
    cmd_reference,
    cmd_trace,
    format_value,
)
from .exceptions import BeamInputError
from .models import CommandResult

logger = logging.getLogger(__name__)

EXIT_CODES = {"ok": EXIT_OK, "validation": EXIT_VALIDATION, "solver": EXIT_SOLVER}


def parse_segments(text: str) -> List[int]:
    """'2,4,8' or '2..128' (doubling)."""
    try:
        if ".." in text:
            start, stop = (int(v) for v in text.split(".."))
            counts = []
            while start <= stop:
                counts.append(start)
                start *= 2
            return counts
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid segment list '{text}'")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shear_beam_analyzer",
        description="Shear-flexible geometrically exact beams: benchmarks, stability and reference solutions",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    trace = sub.add_parser("trace", help="run a model file and write one CSV row per step")
    trace.add_argument("--model", required=True, help="JSON model file")
    trace.add_argument("--out", help="CSV output path (stdout when omitted)")
    trace.add_argument("--shape", help="deformed-shape CSV output path")

    converge = sub.add_parser("converge", help="convergence study of a built-in case")
    converge.add_argument("--case", required=True, help=f"case id name[:model][:parameter], names: {', '.join(CASES)}")
    converge.add_argument("--segments", required=True, type=parse_segments, help="e.g. 2,4,8 or 2..128")
    converge.add_argument("--out", help="CSV output path (stdout when omitted)")

    buckle = sub.add_parser("buckle", help="critical strain of a straight member")
    source = buckle.add_mutually_exclusive_group(required=True)
    source.add_argument("--model", help="JSON model file")
    source.add_argument("--case", help="built-in case id, e.g. column:reissner:1/6")
    buckle.add_argument("--mode", choices=["compression", "tension"], default="compression")
    buckle.add_argument("--increment", type=float, help="strain increment per step")
    buckle.add_argument("--segments", type=int, help="segments per element for built-in cases")

    reference = sub.add_parser("reference", help="closed-form tables and curve data")
    reference.add_argument("--table", required=True, choices=REFERENCE_TABLES)
    reference.add_argument("--out", help="CSV output path (stdout when omitted)")
    return parser


def print_rows(result: CommandResult) -> None:
    print(",".join(result.columns))
    for row in result.rows:
        print(",".join(format_value(row.get(column)) for column in result.columns))


def finish(result: CommandResult, out: Optional[str]) -> int:
    if result.error is not None:
        print(f"error: {result.error}", file=sys.stderr)
    elif out is None:
        print_rows(result)
    return EXIT_CODES[result.status]


def main(argv: Optional[List[str]] = None) -> int:
    logging.basicConfig(level=LOG_LEVEL, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    logger.info(f"Running command '{args.command}'")

    if args.command == "trace":
        return finish(cmd_trace(args.model, args.out, args.shape), args.out)
    if args.command == "converge":
        return finish(cmd_converge(args.case, args.segments, args.out), args.out)
    if args.command == "reference":
        return finish(cmd_reference(args.table, args.out), args.out)

    if args.case is not None:
        try:
            source = build_case(args.case, args.segments)
        except (BeamInputError, ValueError) as e:
            logger.error(f"Invalid case: {e}", exc_info=True)
            print(f"error: {e}", file=sys.stderr)
            return EXIT_VALIDATION
    else:
        source = args.model
    report = cmd_buckle(source, args.mode, args.increment)
    if report.error is not None:
        print(f"error: {report.error}", file=sys.stderr)
    elif not report.critical:
        print(f"not-critical: no sign change of the monitor (analytical {format_value(report.analytical) or 'none'})")
    else:
        print(f"numerical,{format_value(report.numerical)}")
        print(f"analytical,{format_value(report.analytical)}")
        print(f"relative_deviation,{format_value(report.relative_deviation)}")
    return EXIT_CODES[report.status]


if __name__ == "__main__":
    sys.exit(main())
