"""Tests for exit codes, result records and CSV output."""

import csv
import io
import json
import math

import numpy as np
import pytest

from nuchord.exceptions import (
    ConfigurationError,
    IndexNotStabilized,
    NoConvergence,
    NotCoprime,
)
from nuchord.results import (
    SWEEP_HEADER,
    ExitCode,
    ResultRecord,
    error_record,
    exit_code_for,
    format_csv,
    inputs_digest,
    write_csv,
)


@pytest.mark.parametrize(
    "error, code",
    [
        (ConfigurationError("bad"), ExitCode.SPEC_ERROR),
        (NotCoprime("shared zero"), ExitCode.NOT_COPRIME),
        (NoConvergence("budget"), ExitCode.NO_CONVERGENCE),
        (IndexNotStabilized("radii"), ExitCode.NUMERICAL_ERROR),
        (KeyboardInterrupt(), ExitCode.INTERRUPTED),
        (RuntimeError("boom"), ExitCode.GENERAL_ERROR),
    ],
)
def test_exit_code_for(error, code):
    assert exit_code_for(error) is code


class TestInputsDigest:
    def test_flag_order_is_irrelevant(self):
        first = inputs_digest(["abc", "def"], {"tol": 1e-9, "instance": "circle"})
        second = inputs_digest(["abc", "def"], {"instance": "circle", "tol": 1e-9})
        assert first == second

    def test_parts_are_separated(self):
        assert inputs_digest(["ab", "c"]) != inputs_digest(["a", "bc"])

    def test_flags_change_the_digest(self):
        assert inputs_digest(["abc"], {"tol": 1e-9}) != inputs_digest(["abc"], {"tol": 1e-8})


class TestResultRecord:
    def test_identical_records_serialize_identically(self):
        values = {"d_cr": 0.0905357, "branch": "kappa_sup", "grid_size": 4096}
        first = ResultRecord("metric", "digest", dict(values)).to_json()
        second = ResultRecord("metric", "digest", dict(reversed(list(values.items())))).to_json()
        assert first == second

    def test_numpy_and_non_finite_values(self):
        record = ResultRecord(
            "margin",
            "digest",
            {"mu": np.float64(0.25), "mu_inverse": math.inf, "nan": math.nan, "grid": np.int64(8), "z": 1 + 2j},
        )
        values = json.loads(record.to_json())["values"]
        assert values == {"mu": 0.25, "mu_inverse": "inf", "nan": None, "grid": 8, "z": {"re": 1.0, "im": 2.0}}

    def test_export_writes_file(self, tmp_path):
        path = tmp_path / "out" / "record.json"
        text = ResultRecord("metric", "digest", {"d_cr": 0.5}).export(path)
        assert json.loads(path.read_text(encoding="utf-8")) == json.loads(text)

    def test_error_record(self):
        record = error_record("metric", NotCoprime("shared zero", {"gap": 0.0}), "digest")
        data = record.to_dict()
        assert data["status"] == "error"
        assert data["values"]["exit_code"] == 3
        assert data["values"]["error_type"] == "NotCoprime"
        assert data["values"]["details"] == {"gap": 0.0}


class TestCsv:
    def test_floats_round_trip_exactly(self):
        value = 1.0 / 3.0
        text = format_csv(SWEEP_HEADER, [[0.7, value, value, 0.1, True]])
        rows = list(csv.reader(io.StringIO(text)))
        assert rows[0] == SWEEP_HEADER
        assert float(rows[1][1]) == value
        assert rows[1][4] == "True"

    def test_write_csv(self, tmp_path):
        path = tmp_path / "sweep" / "a.csv"
        write_csv(path, ["a"], [[1.0], [np.float64(2.5)]])
        assert path.read_text(encoding="utf-8") == "a\n1.0\n2.5\n"
