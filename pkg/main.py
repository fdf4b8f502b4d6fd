#!/usr/bin/env python3
"""
nilorbit
Equidistribution of multiparameter polynomial sequences on tori and
step-2 nilmanifolds, as decision procedures with checkable certificates.

Subcommands: weyl, dichotomy, check, dioph, cover, zeros, nil, verify.
Exit codes: 0 success, 1 failure, 2 INCONCLUSIVE under --strict,
3 validation or precondition error.

Version: 1.0.0
License: MIT
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

# Add the src directory to the path
sys.path.insert(0, str(Path(__file__).parent / "src"))

from src.config.settings import DIOPH_ACTIONS, OUTPUT_FORMATS, ExperimentConfig
from src.core.runner import ExperimentRunner
from src.core.suites import SUITES
from src.utils.errors import EXIT_FAILURE, EXIT_INCONCLUSIVE, EXIT_OK, NilorbitError, ValidationError
from src.utils.logger import setup_logging


class _Parser(argparse.ArgumentParser):
    """Usage errors are validation errors (exit 3), not argparse's exit 2."""

    def error(self, message):
        raise ValidationError(f"{self.prog}: {message}")


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file; its values override flags")
    parser.add_argument("--out", dest="output", help="report path (stdout when omitted)")
    parser.add_argument("--format", dest="output_format", choices=OUTPUT_FORMATS, default="json")
    parser.add_argument("--strict", action="store_true", help="exit 2 on an INCONCLUSIVE verdict")
    parser.add_argument("--precision", dest="precision_bits", type=int, default=128,
                        help="mantissa bits for real scalars (>= 80)")
    parser.add_argument("--workers", type=int, help="worker processes (capped by NILORBIT_THREADS)")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    parser.add_argument("--log-file", help="also log to this file")


def _levels(parser: argparse.ArgumentParser, epsilon: bool = False) -> None:
    parser.add_argument("--box", help="side lengths, e.g. 2,1000")
    parser.add_argument("--symmetric", action="store_true", help="use [-N, N] boxes instead of [N]")
    parser.add_argument("--delta", default="0.3")
    parser.add_argument("--cutoff", type=int, help="frequency cutoff K")
    parser.add_argument("--bound", default="10,3", help="bound family A,C for B = A delta^-C")
    if epsilon:
        parser.add_argument("--epsilon", help="run the near-constancy lift at this epsilon")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="nilorbit", description=__doc__.split("\n\n")[1])
    commands = parser.add_subparsers(dest="subcommand", required=True)

    weyl = commands.add_parser("weyl", help="Weyl-sum equidistribution test")
    weyl.add_argument("--poly", required=True)
    _levels(weyl)
    _common(weyl)

    dichotomy = commands.add_parser("dichotomy", help="torus dichotomy or near-constancy lift")
    dichotomy.add_argument("--poly", required=True)
    _levels(dichotomy, epsilon=True)
    dichotomy.add_argument("--density-limit", type=int, default=10_000_000)
    dichotomy.add_argument("--exhaustive-limit", type=int, default=1_000_000)
    _common(dichotomy)

    check = commands.add_parser("check", help="replay a serialized certificate")
    check.add_argument("--certificate", required=True, help="certificate or report JSON")
    _common(check)

    dioph = commands.add_parser("dioph", help="Diophantine solvers")
    dioph.add_argument("action", choices=DIOPH_ACTIONS)
    dioph.add_argument("--instance", help="instance file")
    dioph.add_argument("--alpha", help="scalar for best-multiplier")
    dioph.add_argument("--Q", type=int, help="multiplier range for best-multiplier")
    dioph.add_argument("--bound", default="10,3")
    dioph.add_argument("--delta", default="0.3", help="used when the instance sets none")
    dioph.add_argument("--epsilon", help="interval width when the instance sets none")
    dioph.add_argument("--cutoff", type=int)
    dioph.add_argument("--grid-constant", default="1/40")
    dioph.add_argument("--density-limit", type=int, default=10_000_000)
    dioph.add_argument("--exhaustive-limit", type=int, default=1_000_000)
    _common(dioph)

    cover = commands.add_parser("cover", help="progression-cover audit")
    cover.add_argument("--poly", required=True)
    cover.add_argument("--N", type=int, required=True)
    cover.add_argument("--L", type=int, required=True)
    cover.add_argument("--delta", default="0.3")
    cover.add_argument("--cutoff", type=int)
    cover.add_argument("--cover-constant", default="1")
    cover.add_argument("--offset-samples", type=int, default=64)
    _common(cover)

    zeros = commands.add_parser("zeros", help="zero count on [L]^t")
    zeros.add_argument("--poly", required=True)
    zeros.add_argument("--L", type=int, required=True)
    _common(zeros)

    nil = commands.add_parser("nil", help="step-2 nilmanifold dichotomy check")
    nil.add_argument("--spec", required=True, help="group spec file or preset name")
    nil.add_argument("--seq", required=True, help="sequence file")
    _levels(nil)
    nil.add_argument("--vertical-samples", type=int, default=4)
    _common(nil)

    verify = commands.add_parser("verify", help="randomized lemma suites")
    verify.add_argument("--suite", default="all", choices=(*SUITES, "all"))
    verify.add_argument("--trials", type=int, default=20)
    _common(verify)

    return parser


def load_config(argv: Optional[List[str]] = None) -> ExperimentConfig:
    """Flags first, then the config file on top of them."""
    args = vars(build_parser().parse_args(argv))
    config_path = args.pop("config", None)
    config = ExperimentConfig(**{k: v for k, v in args.items() if v is not None})
    if config_path:
        config = ExperimentConfig.from_file(Path(config_path), base=config)
    return config


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point for nilorbit."""

    setup_logging()
    logger = logging.getLogger("nilorbit")

    try:
        config = load_config(argv)
        setup_logging(config.log_level, config.log_path)

        runner = ExperimentRunner(config)
        report = runner.run()
        report.write(config.output, config.output_format)
        runner.statistics.log_final_stats()

        if report.failed:
            return EXIT_FAILURE
        if report.inconclusive and config.strict:
            logger.error("INCONCLUSIVE verdict under --strict")
            return EXIT_INCONCLUSIVE
        return EXIT_OK

    except KeyboardInterrupt:
        logger.info("Run stopped by user")
        return EXIT_FAILURE
    except NilorbitError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return e.exit_code
    except Exception as e:
        logger.error(f"Fatal error: {e}")
        return EXIT_FAILURE
    finally:
        logger.debug("Shutdown complete")


if __name__ == "__main__":
    sys.exit(main())
