#!/usr/bin/env python3
"""
cudf-align - component-aligned package upgrades

Usage:
    cudf-align --input problem.cudf --criteria "-removed,-unaligned(packages)" --report
    cudf-align --input problem.cudf --mode emit --emit lp,opb,wcnf --out-dir out
    python -m cudf_align.cli --help
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional, Tuple

from cudf_align.application.criteria_spec import parse_criteria
from cudf_align.application.export import EmitJob, EmitterFactory, write_outputs
from cudf_align.application.generator import generate_instance
from cudf_align.application.milp_encoder import assemble
from cudf_align.application.oracle import verify
from cudf_align.application.report import build_run_report, report_table
from cudf_align.application.solver import SolveBudget, SolveStatus, solve_lex
from cudf_align.core.config import LogLevel, settings
from cudf_align.domain.cudf import FAIL, build_cluster_index, parse_cudf, reduced_sources, serialize_solution
from cudf_align.domain.errors import CudfAlignError, InfeasibleRequestError
from cudf_align.domain.models import CriterionSpec, Request, Universe

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INFEASIBLE = 1
EXIT_INPUT_ERROR = 2
EXIT_BUDGET = 3


def load_instance(args) -> Tuple[str, Universe, Request]:
    """Read --input, or generate an instance from --seed."""
    if args.input:
        path = Path(args.input)
        universe, request = parse_cudf(path.read_text(encoding="utf-8"))
        instance_id = path.stem
    else:
        universe, request = generate_instance(args.seed)
        instance_id = f"seed-{args.seed}"

    index = build_cluster_index(universe)
    logger.info(
        f"Loaded {instance_id}: {len(universe)} packages, {len(index.sources())} sources, "
        f"{len(reduced_sources(index))} with several versions"
    )
    return instance_id, universe, request


def cmd_solve(args, instance_id: str, universe: Universe, request: Request, spec: CriterionSpec) -> int:
    """Solve lexicographically and print the CUDF solution."""
    lp = assemble(universe, request, spec)
    budget = SolveBudget(
        max_nodes=args.budget_nodes or settings.budget_nodes,
        max_seconds=args.budget_seconds or settings.budget_seconds,
    )
    result = solve_lex(lp, budget)

    if result.status == SolveStatus.INFEASIBLE:
        logger.info("No installation satisfies the request")
        print(serialize_solution(universe, None), end="")
        return EXIT_INFEASIBLE
    if result.status == SolveStatus.BUDGET_EXCEEDED:
        logger.error(f"Budget exceeded after {result.nodes} nodes")
        return EXIT_BUDGET

    valid, violations = verify(universe, request, result.installation)
    if not valid:
        raise CudfAlignError(f"solver produced an invalid installation: {violations}")

    print(serialize_solution(universe, result.installation), end="")
    if args.report:
        print()
        print(report_table([build_run_report(instance_id, universe, result)]), end="")
    return EXIT_OK


def cmd_emit(args, instance_id: str, universe: Universe, request: Request, spec: CriterionSpec) -> int:
    """Write LP/OPB/WCNF files for external solvers."""
    lp = assemble(universe, request, spec)
    formats = [f.strip() for f in args.emit.split(",") if f.strip()]
    job = EmitJob(instance_id, universe, request, spec, lp, merge=args.merge)
    written = write_outputs(job, formats, Path(args.out_dir or settings.out_dir))
    logger.info(f"Wrote {len(written)} files")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cudf-align",
        description="Minimize removals and source-version unalignment in CUDF upgrades",
    )
    parser.add_argument("--input", help="CUDF document to solve")
    parser.add_argument("--seed", type=int, help="Generate a random instance instead of reading --input")
    parser.add_argument(
        "--criteria",
        default="-removed",
        help="Lexicographic criteria, e.g. '-removed,-unaligned(packages)'",
    )
    parser.add_argument("--mode", choices=["solve", "emit"], default="solve")
    parser.add_argument("--emit", default="lp,opb,wcnf", help="Comma-separated output formats")
    parser.add_argument("--merge", choices=["first", "lex"], default="first",
                        help="Objective written to LP/OPB: first level or weighted lexicographic merge")
    parser.add_argument("--out-dir", help="Directory for emitted files")
    parser.add_argument("--budget-nodes", type=int, help="Search node budget per level")
    parser.add_argument("--budget-seconds", type=float, help="Time budget per level")
    parser.add_argument("--report", action="store_true", help="Print the run report after the solution")
    parser.add_argument("--log-level", choices=[level.value for level in LogLevel], help="Logging level")
    return parser


def run(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exit_:
        return exit_.code if isinstance(exit_.code, int) else EXIT_INPUT_ERROR

    level = args.log_level or settings.log_level.value
    logging.basicConfig(
        level=level,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        stream=sys.stderr,
    )
    logging.getLogger().setLevel(level)

    if not args.input and args.seed is None:
        logger.error("Either --input or --seed is required")
        return EXIT_INPUT_ERROR
    if args.mode == "emit":
        unknown = [f for f in args.emit.split(",") if f.strip() and f.strip() not in EmitterFactory.formats()]
        if unknown:
            logger.error(f"Unknown output formats: {unknown}")
            return EXIT_INPUT_ERROR
    if (args.budget_nodes is not None and args.budget_nodes <= 0) or (
        args.budget_seconds is not None and args.budget_seconds <= 0
    ):
        logger.error("Budgets must be positive")
        return EXIT_INPUT_ERROR

    try:
        spec = parse_criteria(args.criteria)
        instance_id, universe, request = load_instance(args)
        command = cmd_emit if args.mode == "emit" else cmd_solve
        return command(args, instance_id, universe, request, spec)
    except InfeasibleRequestError as e:
        logger.info(f"Infeasible request: {e}")
        print(f"{FAIL}")
        return EXIT_INFEASIBLE
    except CudfAlignError as e:
        logger.error(f"Error: {e}")
        return EXIT_INPUT_ERROR
    except OSError as e:
        logger.error(f"Cannot access {e.filename}: {e.strerror}")
        return EXIT_INPUT_ERROR
    except UnicodeDecodeError as e:
        logger.error(f"Input is not UTF-8: {e.reason}")
        return EXIT_INPUT_ERROR


def main() -> int:
    return run()


if __name__ == "__main__":
    sys.exit(main())
