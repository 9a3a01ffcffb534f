"""
Structured logging for the nuchord package.

Numerical modules report grid refinements, branch decisions and results
through a ContextualLogger bound to their component name. The console sink
writes to stderr; stdout carries only JSON and CSV results.
"""

import os
import sys
from pathlib import Path
from typing import Any, Dict, Optional, Union

from loguru import logger

from .exceptions import NuChordError
from .types import LogLevel

LogTarget = Union[str, Path]

_PLAIN_DETAILED = (
    "{time:YYYY-MM-DD HH:mm:ss.SSS} | {level: <8} | "
    "{extra[component]}:{function}:{line} | {message} | {extra}"
)
_COLOR_DETAILED = (
    "<green>{time:YYYY-MM-DD HH:mm:ss.SSS}</green> | <level>{level: <8}</level> | "
    "<cyan>{extra[component]}</cyan>:<cyan>{function}</cyan>:<cyan>{line}</cyan> | "
    "<level>{message}</level> | <blue>{extra}</blue>"
)
_PLAIN_SHORT = "{time:HH:mm:ss} | {level: <8} | {message}"
_COLOR_SHORT = "<green>{time:HH:mm:ss}</green> | <level>{level: <8}</level> | <level>{message}</level>"

CONSOLE_FORMATS = {
    (True, False): _PLAIN_DETAILED,
    (True, True): _COLOR_DETAILED,
    (False, False): _PLAIN_SHORT,
    (False, True): _COLOR_SHORT,
}
FILE_FORMAT = _PLAIN_DETAILED

LOG_ROTATION = "10 MB"
LOG_RETENTION = "7 days"


def _normalize_level(level: Union[str, LogLevel]) -> str:
    name = (level.value if isinstance(level, LogLevel) else str(level)).upper()
    valid = [member.value for member in LogLevel]
    if name not in valid:
        raise ValueError(f"Invalid log level: {level}. Must be one of {valid}")
    return name


def _terminal_supports_color() -> bool:
    if os.getenv("NO_COLOR") or not sys.stderr.isatty():
        return False
    if os.getenv("FORCE_COLOR"):
        return True
    term = os.getenv("TERM", "").lower()
    return "color" in term or term in ("xterm", "screen")


class LoggingManager:
    """
    Owns the loguru sinks of a nuchord process.

    A second call to configure_logging replaces the previous sinks, so the
    CLI and the tests can reconfigure freely.
    """

    def __init__(self) -> None:
        self._log_file_path: Optional[Path] = None

    def configure_logging(
        self,
        log_level: Union[str, LogLevel] = LogLevel.INFO,
        log_file: Optional[LogTarget] = None,
        structured: bool = True,
        enable_colors: Optional[bool] = None,
    ) -> None:
        """
        Install the console sink and, optionally, a rotating file sink.

        Args:
            log_level: Minimum level for every sink
            log_file: Where to keep a persistent log (parent directories are created)
            structured: Include the bound fields on each console line
            enable_colors: Force colors on or off; detected from the terminal when None

        Raises:
            ValueError: Unknown level name
        """
        level = _normalize_level(log_level)
        colors = _terminal_supports_color() if enable_colors is None else enable_colors

        self.reset_logging()
        logger.configure(extra={"component": "nuchord"})
        logger.add(
            sys.stderr,
            format=CONSOLE_FORMATS[(structured, colors)],
            level=level,
            colorize=colors,
            backtrace=level == "DEBUG",
            diagnose=level == "DEBUG",
            catch=True,
        )
        if log_file:
            self._add_file_sink(Path(log_file), level)

        logger.debug(
            "Logging configured",
            log_level=level,
            colors=colors,
            log_file=str(log_file) if log_file else None,
        )

    def _add_file_sink(self, path: Path, level: str) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        logger.add(
            str(path),
            format=FILE_FORMAT,
            level=level,
            rotation=LOG_ROTATION,
            retention=LOG_RETENTION,
            compression="gz",
            backtrace=True,
            diagnose=False,
            catch=True,
        )
        self._log_file_path = path

    def reset_logging(self) -> None:
        """Drop every sink, including loguru's default one."""
        logger.remove()
        self._log_file_path = None

    def get_log_file_path(self) -> Optional[Path]:
        return self._log_file_path


class ContextualLogger:
    """
    Logger carrying a fixed context plus per-call keyword fields.

    Every numerical module holds one bound to its component name, e.g.
    ``get_logger({"component": "metric"})``.
    """

    def __init__(self, context: Optional[Dict[str, Any]] = None):
        self.context = dict(context or {})
        self._logger = logger.bind(**self.context)

    def bind(self, **kwargs: Any) -> "ContextualLogger":
        return ContextualLogger({**self.context, **kwargs})

    def _emit(self, level: str, message: str, fields: Dict[str, Any]) -> None:
        # depth=2 reports the caller of debug()/info()/..., not this helper
        self._logger.bind(**fields).opt(depth=2).log(level, message)

    def debug(self, message: str, **kwargs: Any) -> None:
        self._emit("DEBUG", message, kwargs)

    def info(self, message: str, **kwargs: Any) -> None:
        self._emit("INFO", message, kwargs)

    def warning(self, message: str, **kwargs: Any) -> None:
        self._emit("WARNING", message, kwargs)

    def error(self, message: str, **kwargs: Any) -> None:
        self._emit("ERROR", message, kwargs)

    def exception(self, message: str, **kwargs: Any) -> None:
        self._logger.bind(**kwargs).opt(exception=True, depth=1).error(message)

    def log_computation_start(self, operation: str, **inputs: Any) -> None:
        self.info("Computation started", operation=operation, phase="start", **inputs)

    def log_refinement(self, operation: str, grid_size: int, estimate: float, delta: Optional[float]) -> None:
        """One grid-doubling pass of an adaptive sup/inf search (delta is None on the first pass)."""
        self.debug("Adaptive grid pass", operation=operation, grid_size=grid_size, estimate=estimate, delta=delta)

    def log_computation_result(
        self,
        operation: str,
        value: float,
        grid_size: int,
        tolerance: float,
        **extra: Any,
    ) -> None:
        self.info(
            "Computation completed",
            operation=operation,
            value=value,
            grid_size=grid_size,
            tolerance=tolerance,
            phase="complete",
            **extra,
        )

    def log_computation_error(self, operation: str, error: Union[str, Exception]) -> None:
        """Log a failed computation; NuChordError details become an ``error_details`` field."""
        fields: Dict[str, Any] = {"operation": operation, "error": str(error), "error_type": type(error).__name__}
        if isinstance(error, NuChordError) and error.details:
            fields["error_details"] = error.details
        self._emit("ERROR", "Computation failed", fields)


logging_manager = LoggingManager()


def get_logger(context: Optional[Dict[str, Any]] = None) -> ContextualLogger:
    return ContextualLogger(context)


def configure_logging(
    log_level: Union[str, LogLevel] = LogLevel.INFO,
    log_file: Optional[LogTarget] = None,
    structured: bool = True,
    enable_colors: Optional[bool] = None,
) -> None:
    """Configure the process-wide sinks through the shared LoggingManager."""
    logging_manager.configure_logging(
        log_level=log_level,
        log_file=log_file,
        structured=structured,
        enable_colors=enable_colors,
    )


def reset_logging() -> None:
    logging_manager.reset_logging()
