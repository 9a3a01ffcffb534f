"""Tests for batch progress tracking and the console reports."""

import time

from nuchord.progress import CheckProgress, ProgressStats, ReportGenerator
from nuchord.selftest import CheckResult


class TestProgressStats:
    def test_percentage_and_rate(self):
        stats = ProgressStats(start_time=time.time() - 10.0, total_items=40)
        stats.update_progress(10)
        assert stats.get_percentage() == 25.0
        assert 0.9 < stats.processing_rate < 1.1
        assert stats.get_eta_seconds() is not None

    def test_unknown_total(self):
        stats = ProgressStats()
        assert stats.get_percentage() == 0.0
        assert stats.format_eta() == "Unknown"

    def test_eta_formatting(self):
        stats = ProgressStats()
        stats.estimated_completion = time.time() + 7200.0
        assert stats.format_eta().endswith("h")
        stats.estimated_completion = time.time() + 120.0
        assert stats.format_eta().endswith("m")

    def test_rate_formatting(self):
        stats = ProgressStats(processing_rate=0.5)
        assert stats.format_rate() == "0.50/s"
        stats.processing_rate = 12.34
        assert stats.format_rate() == "12.3/s"


class TestCheckProgress:
    def test_counts_items_and_failures(self):
        progress = CheckProgress("selftest", total=3, log_interval=0.0)
        progress.advance("metric_axioms")
        progress.advance("winding_oracle", failed=True)
        progress.advance("robust_bound")
        summary = progress.complete()
        assert summary["processed"] == 3
        assert summary["failures"] == 1
        assert progress.phase == "completed"


class TestReportGenerator:
    def test_check_table(self):
        checks = [
            CheckResult("metric_axioms", True, 1e-12, 1e-9, 100),
            CheckResult("winding_oracle", False, 1.0, 0.0, 50),
        ]
        report = ReportGenerator.format_check_table(checks)
        assert "NUCHORD SELF-TEST REPORT" in report
        assert "PASS" in report and "FAIL" in report
        assert "Checks: 2  Passed: 1  Failed: 1" in report

    def test_example_report(self):
        rows = [{"a": 1.2, "d_cr": 0.0905357, "closed_form": 0.0905357}]
        report = ReportGenerator.format_example_report(rows, 3.224, 48, 50)
        assert "3.2240" in report
        assert "48 / 50" in report
