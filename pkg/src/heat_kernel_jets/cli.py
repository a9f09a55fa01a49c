"""Compute and verify jets of heat kernel coefficients at a basepoint.

All outputs are germs at the origin of the given normal coordinates; the
(4*pi)^(-n/2) prefactor is dropped unless --reinstate-4pi tags it on.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

from . import __version__
from .diffop import DiffOp
from .heatcoeff import (
    HeatJetRequirements,
    OrderBoundError,
    difference_operator,
    ev_sharp_table,
    heat_jets,
)
from .jet_algebra import JetAlgebraError, TruncationError, format_value
from .laplacian import (
    GaugeError,
    LaplacianSpec,
    generalized_laplacian,
    hat_coefficients,
    validate_normal_gauge,
)
from .problem import ProblemSpec, ProblemSpecError, load_problem
from .report import CheckReport, first_failure
from .verification import DEFAULT_SEED, VERIFY_LEVELS, run_selftest, run_verification
from .writer import FORMAT_VERSION, ResultDoc, ResultFormatError, read_result, write_result

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_TRUNCATION = 4
EXIT_VERIFICATION = 5


# ----------------------------------------------------------------------
# Pipeline
# ----------------------------------------------------------------------

def build_provenance(problem: ProblemSpec, requirements: HeatJetRequirements) -> dict:
    return {
        "input_sha256": problem.source_hash,
        "version": __version__,
        "format_version": FORMAT_VERSION,
        "requirements": requirements.to_dict(),
        "jet_degree": problem.jet_degree,
    }


def build_operator(problem: ProblemSpec, level: str) -> Tuple[DiffOp, HeatJetRequirements, LaplacianSpec]:
    """Validate the problem data and assemble its generalized Laplacian."""

    requirements = problem.check_sufficiency(level)
    print_requirements(requirements)
    spec = problem.laplacian_spec(level)
    report = validate_normal_gauge(spec.metric)
    if not report.passed:
        raise GaugeError(report)
    return generalized_laplacian(spec), requirements, spec


def compute_result(problem: ProblemSpec, level: str) -> ResultDoc:
    L, requirements, spec = build_operator(problem, level)
    table = ev_sharp_table(difference_operator(L, requirements.order))
    heat = heat_jets(L, problem.max_k, problem.max_degree, table=table)
    hat = hat_coefficients(heat, spec.metric)
    reports = run_verification(L, heat, level, table=table)
    return ResultDoc(heat, hat, reports, build_provenance(problem, requirements), problem.reinstate_4pi)


def print_requirements(requirements: HeatJetRequirements) -> None:
    print(
        f"requirements: difference operator order {requirements.order}, "
        f"metric jets to degree {requirements.metric_degree}, "
        f"first-order/potential jets to degree {requirements.lower_order_degree}"
    )


def print_heat_jets(doc: ResultDoc) -> None:
    prefix = "(4*pi)^(-n/2) * " if doc.reinstate_4pi else ""
    for k, jet in enumerate(doc.heat.coefficients):
        print(f"a_{k} = {prefix}{jet}")
        logger.debug("a_%d(0) = %s", k, format_value(jet.constant_term()))


def print_reports(reports: Sequence[CheckReport]) -> None:
    for report in reports:
        print(report.summary_line())


# ----------------------------------------------------------------------
# Commands
# ----------------------------------------------------------------------

def cmd_compute(
    spec_path: Path,
    output: Path,
    *,
    max_k: Optional[int] = None,
    max_degree: Optional[int] = None,
    reinstate_4pi: Optional[bool] = None,
    fmt: str = "json",
) -> ResultDoc:
    """Compute a_0..a_K to the target degree and write the result document."""

    problem = load_problem(spec_path).with_overrides(
        max_k=max_k, max_degree=max_degree, reinstate_4pi=reinstate_4pi
    )
    doc = compute_result(problem, problem.verify_level)
    write_result(doc, output, fmt)
    print_heat_jets(doc)
    print_reports(doc.verification)
    logger.info("Wrote heat jets to %s", output)
    return doc


def cmd_verify(
    spec_path: Path,
    *,
    level: Optional[str] = None,
    against: Optional[Path] = None,
    max_k: Optional[int] = None,
    max_degree: Optional[int] = None,
) -> List[CheckReport]:
    """Run a verification level on freshly computed jets, or on a stored result document."""

    problem = load_problem(spec_path).with_overrides(max_k=max_k, max_degree=max_degree)
    if level is None:
        level = problem.verify_level if problem.verify_level != "none" else "fast"
    if against is None:
        reports = compute_result(problem, level).verification
    else:
        doc = read_result(against)
        heat = doc.heat
        if (heat.n, heat.rank) != (problem.dimension, problem.rank):
            raise ProblemSpecError(
                f"result document is for n={heat.n}, m={heat.rank} but the problem has "
                f"n={problem.dimension}, m={problem.rank}"
            )
        problem = problem.with_overrides(max_k=heat.max_k, max_degree=heat.degree)
        # complete intertwining needs the full-level input degrees
        L, _, _ = build_operator(problem, "full")
        reports = run_verification(L, heat, level, complete_intertwining=True)
    print_reports(reports)
    return reports


def cmd_selftest(seed: int = DEFAULT_SEED) -> List[CheckReport]:
    """Run the flat-model identity suites; needs no input file."""

    reports = run_selftest(seed)
    print_reports(reports)
    return reports


# ----------------------------------------------------------------------
# Entry point
# ----------------------------------------------------------------------

def parse_args(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(prog="heat-kernel-jets", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument(
        "--log-level",
        default="INFO",
        choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"],
        help="Logging verbosity",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    compute = commands.add_parser("compute", help="Compute heat coefficient jets for a problem file")
    compute.add_argument("spec", type=Path, help="Problem file (JSON)")
    compute.add_argument("-o", "--output", type=Path, required=True, help="Output path for the result document")
    compute.add_argument("--max-k", type=int, default=None, help="Override the largest coefficient index K")
    compute.add_argument("--max-degree", type=int, default=None, help="Override the jet degree of the results")
    compute.add_argument(
        "--reinstate-4pi",
        action="store_true",
        default=None,
        help="Tag results with the (4*pi)^(-n/2) prefactor (stored symbolically)",
    )
    compute.add_argument("--format", choices=["json", "csv"], default="json", help="Output format")

    verify = commands.add_parser("verify", help="Run verification suites for a problem file")
    verify.add_argument("spec", type=Path, help="Problem file (JSON)")
    verify.add_argument(
        "--level",
        choices=[lvl for lvl in VERIFY_LEVELS if lvl != "none"],
        default=None,
        help=(
            "Verification level (default: the problem file's, else fast). fast checks intertwining up to "
            "mu = min(K, D//2); full adds the remaining suites and intertwining up to "
            "mu = K + (D + min(n, D))//2, where every coefficient of a_0..a_K enters; --against always uses the latter"
        ),
    )
    verify.add_argument("--against", type=Path, default=None,
                        help="Verify a stored result document instead of recomputing; inputs must cover the full level")
    verify.add_argument("--max-k", type=int, default=None, help="Override the largest coefficient index K")
    verify.add_argument("--max-degree", type=int, default=None, help="Override the jet degree of the results")

    selftest = commands.add_parser("selftest", help="Check the flat-model identities")
    selftest.add_argument("--seed", type=int, default=DEFAULT_SEED, help="Seed for the random test inputs")
    return parser.parse_args(argv)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = parse_args(argv)

    logging.basicConfig(level=getattr(logging, args.log_level), format="%(levelname)s:%(name)s:%(message)s")

    try:
        if args.command == "compute":
            reports = cmd_compute(
                args.spec,
                args.output,
                max_k=args.max_k,
                max_degree=args.max_degree,
                reinstate_4pi=args.reinstate_4pi,
                fmt=args.format,
            ).verification
        elif args.command == "verify":
            reports = cmd_verify(
                args.spec, level=args.level, against=args.against, max_k=args.max_k, max_degree=args.max_degree
            )
        else:
            reports = cmd_selftest(args.seed)
    except (ProblemSpecError, ResultFormatError) as exc:
        logger.error("%s", exc)
        return EXIT_PARSE
    except TruncationError as exc:
        logger.error("Insufficient jet degree: %s", exc)
        return EXIT_TRUNCATION
    except GaugeError as exc:
        logger.error("%s", exc)
        for detail in exc.report.details:
            logger.error("  %s", detail)
        return EXIT_VALIDATION
    except JetAlgebraError as exc:
        logger.error("Invalid operator data: %s", exc)
        return EXIT_VALIDATION
    except OrderBoundError as exc:
        logger.error("%s", exc)
        return EXIT_VERIFICATION

    failure = first_failure(reports)
    if failure is not None:
        logger.error("Verification failed: %s", failure.summary_line())
        return EXIT_VERIFICATION
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover - CLI entry point
    sys.exit(main())
