"""Run statistics for suites and command-line runs."""

import logging
import time
from dataclasses import dataclass, field
from typing import Any, Dict

logger = logging.getLogger(__name__)


@dataclass
class RunStatistics:
    """Counters for trials and verdicts over one run."""

    trials: int = 0
    passed: int = 0
    failed: int = 0
    inconclusive: int = 0
    start_time: float = field(default_factory=time.perf_counter)

    def record(self, passed: bool, inconclusive: bool = False) -> None:
        """Count one finished trial."""
        self.trials += 1
        if inconclusive:
            self.inconclusive += 1
        elif passed:
            self.passed += 1
        else:
            self.failed += 1

    def merge(self, other: "RunStatistics") -> None:
        self.trials += other.trials
        self.passed += other.passed
        self.failed += other.failed
        self.inconclusive += other.inconclusive

    @property
    def elapsed(self) -> float:
        return time.perf_counter() - self.start_time

    def get_stats(self) -> Dict[str, Any]:
        """Counters only; wall time is reported separately so bodies replay byte-for-byte."""
        return {
            "trials": self.trials,
            "passed": self.passed,
            "failed": self.failed,
            "inconclusive": self.inconclusive,
        }

    def log_final_stats(self) -> None:
        """Log final statistics."""
        stats = self.get_stats()
        logger.info("Final Statistics:")
        logger.info(f"Trials run: {stats['trials']}")
        logger.info(f"Passed: {stats['passed']}")
        logger.info(f"Failed: {stats['failed']}")
        logger.info(f"Inconclusive: {stats['inconclusive']}")
        logger.info(f"Wall time: {self.elapsed:.2f} seconds")
