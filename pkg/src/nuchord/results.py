"""
Exit codes and machine-readable result output.

Every command produces a ResultRecord. Records serialize to JSON with sorted
keys so identical inputs give byte-identical output apart from wall_time.
"""

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np

from .exceptions import (
    ConfigurationError,
    NoConvergence,
    NotCoprime,
    NuChordError,
)
from .logging import get_logger

logger = get_logger({"component": "results"})


class ExitCode(IntEnum):
    """
    Exit codes of the nuchord command line.

    A valid numerical answer (including "not stabilizing" or "not certified")
    exits with SUCCESS; nonzero codes are reserved for failures.
    """
    SUCCESS = 0                   # Computation finished
    GENERAL_ERROR = 1             # Unexpected application error
    SPEC_ERROR = 2                # Plant spec, config file or flag error
    NOT_COPRIME = 3               # Factorization is not coprime
    NO_CONVERGENCE = 4            # Adaptive grid budget exhausted
    NUMERICAL_ERROR = 5           # Other numerical failure
    SELFTEST_FAILED = 6           # At least one self-test check failed
    INTERRUPTED = 130             # SIGINT


def exit_code_for(exception: BaseException) -> ExitCode:
    """
    Determine exit code based on exception type.

    Args:
        exception: Exception that ended the command

    Returns:
        Exit code documented for that failure class
    """
    if isinstance(exception, ConfigurationError):
        return ExitCode.SPEC_ERROR
    elif isinstance(exception, NotCoprime):
        return ExitCode.NOT_COPRIME
    elif isinstance(exception, NoConvergence):
        return ExitCode.NO_CONVERGENCE
    elif isinstance(exception, KeyboardInterrupt):
        return ExitCode.INTERRUPTED
    elif isinstance(exception, NuChordError):
        return ExitCode.NUMERICAL_ERROR
    else:
        return ExitCode.GENERAL_ERROR


def inputs_digest(parts: Iterable[str], flags: Optional[Dict[str, Any]] = None) -> str:
    """sha256 over input digests and the flags that influence the result."""
    sha = hashlib.sha256()
    for part in parts:
        sha.update(part.encode("utf-8"))
        sha.update(b"\0")
    sha.update(json.dumps(flags or {}, sort_keys=True, default=str).encode("utf-8"))
    return sha.hexdigest()


def _jsonable(value: Any) -> Any:
    """Convert numpy scalars and non-finite floats to plain JSON values."""
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, complex):
        return {"re": value.real, "im": value.imag}
    if isinstance(value, float) and not math.isfinite(value):
        return None if math.isnan(value) else ("inf" if value > 0 else "-inf")
    return value


@dataclass
class ResultRecord:
    """
    Machine-readable outcome of one command.

    Attributes:
        command: Command name
        inputs_digest: sha256 of the inputs and result-relevant flags
        values: Computed quantities with their achieved tolerances
        wall_time: Seconds spent (the only nondeterministic field)
        status: "ok" or "error"
    """
    command: str
    inputs_digest: str
    values: Dict[str, Any] = field(default_factory=dict)
    wall_time: float = 0.0
    status: str = "ok"

    def to_dict(self) -> Dict[str, Any]:
        return _jsonable(
            {
                "command": self.command,
                "inputs_digest": self.inputs_digest,
                "status": self.status,
                "values": self.values,
                "wall_time": self.wall_time,
            }
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def export(self, output_file: Optional[Path] = None) -> str:
        """
        Serialize the record, optionally writing it to a file.

        Args:
            output_file: Optional file to write the JSON to

        Returns:
            JSON text
        """
        text = self.to_json()
        if output_file:
            output_file.parent.mkdir(parents=True, exist_ok=True)
            output_file.write_text(text + "\n", encoding="utf-8")
            logger.info("Result record written", output_file=str(output_file))
        return text


def error_record(command: str, error: BaseException, digest: str = "") -> ResultRecord:
    """Record describing a failed command."""
    details = error.details if isinstance(error, NuChordError) else {}
    values = {
        "error": getattr(error, "message", str(error)),
        "error_type": type(error).__name__,
        "details": details,
        "exit_code": int(exit_code_for(error)),
    }
    return ResultRecord(command, digest, values, status="error")


def format_csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    """CSV text with repr-exact floats."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buffer.getvalue()


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_csv(header, rows), encoding="utf-8")
    logger.info("CSV written", output_file=str(path))


KAPPA_HEADER: List[str] = ["theta", "omega", "kappa"]
SWEEP_HEADER: List[str] = ["a", "d_cr", "closed_form", "mu_lower_bound", "certified"]
