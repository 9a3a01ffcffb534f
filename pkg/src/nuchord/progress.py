"""
Progress tracking and reporting for sweeps and self-test runs.

A sweep evaluates one plant per parameter value and the self-test suite runs
a fixed list of checks. Both log rate and ETA through the structured logger
and finish with a plain-text summary.
"""

import time
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

from .logging import get_logger

logger = get_logger({"component": "progress"})

BANNER = "=" * 60
RULE = "-" * 60


def _format_duration(seconds: float) -> str:
    if seconds < 60:
        return f"{seconds:.0f}s"
    if seconds < 3600:
        return f"{seconds / 60:.1f}m"
    return f"{seconds / 3600:.1f}h"


@dataclass
class ProgressStats:
    """
    Counters behind a batch job.

    Attributes:
        start_time: Epoch seconds when the job began
        current_processed: Items finished so far
        total_items: Items planned (0 when unknown)
        processing_rate: Items per second since start_time
        estimated_completion: Projected epoch seconds of the last item
        failures: Finished items whose result was a failure
    """
    start_time: float = field(default_factory=time.time)
    current_processed: int = 0
    total_items: int = 0
    processing_rate: float = 0.0
    estimated_completion: Optional[float] = None
    failures: int = 0

    def update_progress(self, processed: int, total: Optional[int] = None) -> None:
        now = time.time()
        self.current_processed = processed
        if total is not None:
            self.total_items = total
        elapsed = now - self.start_time
        if elapsed > 0:
            self.processing_rate = processed / elapsed
        if self.processing_rate > 0 and self.total_items > 0:
            left = max(self.total_items - processed, 0)
            self.estimated_completion = now + left / self.processing_rate

    def get_percentage(self) -> float:
        if self.total_items <= 0:
            return 0.0
        return min(100.0, 100.0 * self.current_processed / self.total_items)

    def get_elapsed_time(self) -> float:
        return time.time() - self.start_time

    def get_eta_seconds(self) -> Optional[float]:
        if self.estimated_completion is None:
            return None
        return max(0.0, self.estimated_completion - time.time())

    def format_eta(self) -> str:
        eta = self.get_eta_seconds()
        return "Unknown" if eta is None else _format_duration(eta)

    def format_rate(self) -> str:
        digits = 2 if self.processing_rate < 1 else 1
        return f"{self.processing_rate:.{digits}f}/s"


@dataclass
class CheckProgress:
    """
    Progress of one batch job, logged at most every ``log_interval`` seconds.

    ``phase`` names the item finished last (a check name or ``a=1.2``).
    """
    job_name: str
    total: int = 0
    stats: ProgressStats = field(default_factory=ProgressStats)
    phase: str = "initializing"
    last_log_time: float = 0.0
    log_interval: float = 5.0

    def __post_init__(self) -> None:
        self.stats.total_items = self.total

    def advance(self, phase: Optional[str] = None, failed: bool = False) -> None:
        self.stats.failures += int(failed)
        self.stats.update_progress(self.stats.current_processed + 1)
        if phase is not None:
            self.phase = phase
        now = time.time()
        if now - self.last_log_time >= self.log_interval:
            self.last_log_time = now
            logger.info(
                "Batch progress",
                job=self.job_name,
                phase=self.phase,
                processed=self.stats.current_processed,
                total=self.stats.total_items,
                percentage=f"{self.stats.get_percentage():.1f}%",
                rate=self.stats.format_rate(),
                eta=self.stats.format_eta(),
            )

    def complete(self) -> Dict[str, Any]:
        self.phase = "completed"
        summary = {
            "job": self.job_name,
            "processed": self.stats.current_processed,
            "failures": self.stats.failures,
            "elapsed": self.stats.get_elapsed_time(),
        }
        logger.info("Batch completed", **summary)
        return summary


class ReportGenerator:
    """Plain-text console reports."""

    @staticmethod
    def format_check_table(checks: Sequence[Any], title: str = "NUCHORD SELF-TEST REPORT") -> str:
        """
        Pass/fail table of self-test results.

        Args:
            checks: Objects with name, passed, worst_deviation, threshold and count
        """
        failed = sum(1 for check in checks if not check.passed)
        lines: List[str] = [
            BANNER,
            title,
            BANNER,
            f"{'check':<28}{'result':<8}{'worst':>11}{'limit':>9}{'n':>4}",
            RULE,
        ]
        lines.extend(
            f"{check.name:<28}{'PASS' if check.passed else 'FAIL':<8}"
            f"{check.worst_deviation:>11.2e}{check.threshold:>9.0e}{check.count:>4}"
            for check in checks
        )
        lines += [
            RULE,
            f"Checks: {len(checks)}  Passed: {len(checks) - failed}  Failed: {failed}",
            BANNER,
        ]
        return "\n".join(lines)

    @staticmethod
    def format_example_report(rows: Sequence[Dict[str, Any]], mu_inverse: float, certified: int, total: int) -> str:
        """Report of the delay-plant worked example."""
        lines: List[str] = []
        lines.append(BANNER)
        lines.append("WORKED EXAMPLE: p_a = 1/(s - a e^{-s})")
        lines.append(BANNER)
        lines.append(f"{'a':>6}{'d_cr':>16}{'closed form':>16}{'deviation':>12}")
        for row in rows:
            lines.append(
                f"{row['a']:>6.2f}{row['d_cr']:>16.10f}{row['closed_form']:>16.10f}"
                f"{abs(row['d_cr'] - row['closed_form']):>12.1e}"
            )
        lines.append(RULE)
        lines.append(f"Inverse stability margin of the nominal loop: {mu_inverse:.4f}")
        lines.append(f"Certified plants on (2/3, 3/2): {certified} / {total}")
        lines.append(BANNER)
        return "\n".join(lines)
