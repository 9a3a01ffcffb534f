"""
Configuration management for nuchord.

This module handles TOML configuration file parsing and validation. A
configuration file is optional: without one the defaults of NumericsConfig
apply, and the command line can override tolerances and grid sizes.
"""

import sys
from dataclasses import replace
from pathlib import Path
from typing import Any, Dict, Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .exceptions import ConfigurationError
from .sampling import threads_from_environment
from .types import AppConfig, LogLevel, NumericsConfig

_NUMERIC_FLOATS = ("sup_tol", "invertibility_tol", "ap_window", "ap_grid_density")
_NUMERIC_INTS = ("initial_grid", "max_grid", "refinement_depth", "polish_candidates")


class ConfigManager:
    """
    Manages application configuration loading and validation.

    This class parses TOML configuration files and converts them into typed
    configuration objects.
    """

    def load_config(self, config_path: Path) -> AppConfig:
        """
        Load and validate configuration from a TOML file.

        Args:
            config_path: Path to the TOML configuration file

        Returns:
            Validated application configuration

        Raises:
            ConfigurationError: If configuration is invalid or cannot be loaded
        """
        if not config_path.exists():
            raise ConfigurationError(f"Configuration file not found: {config_path}")
        try:
            with open(config_path, "rb") as f:
                config_data = tomllib.load(f)
        except tomllib.TOMLDecodeError as e:
            raise ConfigurationError(f"Invalid TOML syntax in {config_path}: {e}")
        except OSError as e:
            raise ConfigurationError(f"Failed to load configuration from {config_path}: {e}")

        config = self._parse_config(config_data)
        self.validate_config(config)
        return self.apply_environment(config)

    def default_config(self) -> AppConfig:
        """Configuration used when no file is given."""
        return self.apply_environment(AppConfig())

    def apply_environment(self, config: AppConfig) -> AppConfig:
        """NU_CHORD_THREADS overrides the configured thread count."""
        threads = threads_from_environment()
        if threads is None:
            return config
        return replace(config, threads=threads)

    def _parse_config(self, config_data: Dict[str, Any]) -> AppConfig:
        """
        Parse raw TOML data into typed configuration objects.

        Raises:
            ConfigurationError: If sections or fields have the wrong type
        """
        unknown = set(config_data) - {"numerics", "processing"}
        if unknown:
            raise ConfigurationError(f"Unknown configuration sections: {', '.join(sorted(unknown))}")

        numerics = self._parse_numerics_config(config_data.get("numerics", {}))

        processing_data = config_data.get("processing", {})
        threads = processing_data.get("threads")
        log_level = processing_data.get("log_level", LogLevel.INFO.value)

        if log_level not in [level.value for level in LogLevel]:
            raise ConfigurationError(f"Invalid log level: {log_level}")
        if threads is not None and (not isinstance(threads, int) or isinstance(threads, bool)):
            raise ConfigurationError(f"threads must be an integer, got: {threads}")

        return AppConfig(numerics=numerics, threads=threads, log_level=LogLevel(log_level))

    def _parse_numerics_config(self, numerics_data: Dict[str, Any]) -> NumericsConfig:
        """
        Parse the [numerics] section.

        Args:
            numerics_data: Numerics section from TOML

        Returns:
            Parsed numerics configuration
        """
        unknown = set(numerics_data) - set(_NUMERIC_FLOATS) - set(_NUMERIC_INTS) - {"annulus_radii"}
        if unknown:
            raise ConfigurationError(f"Unknown numerics keys: {', '.join(sorted(unknown))}")

        values: Dict[str, Any] = {}
        for key in _NUMERIC_FLOATS:
            if key in numerics_data:
                value = numerics_data[key]
                if isinstance(value, bool) or not isinstance(value, (int, float)):
                    raise ConfigurationError(f"numerics.{key} must be a number, got: {value}")
                values[key] = float(value)
        for key in _NUMERIC_INTS:
            if key in numerics_data:
                value = numerics_data[key]
                if isinstance(value, bool) or not isinstance(value, int):
                    raise ConfigurationError(f"numerics.{key} must be an integer, got: {value}")
                values[key] = value
        if "annulus_radii" in numerics_data:
            radii = numerics_data["annulus_radii"]
            if not isinstance(radii, list) or not all(isinstance(r, (int, float)) for r in radii):
                raise ConfigurationError("numerics.annulus_radii must be a list of numbers")
            values["annulus_radii"] = tuple(float(r) for r in radii)

        return NumericsConfig(**values)

    def validate_config(self, config: AppConfig) -> None:
        """
        Validate the loaded configuration.

        Args:
            config: Application configuration to validate

        Raises:
            ConfigurationError: If configuration is invalid
        """
        self._validate_numerics_config(config.numerics)
        self._validate_processing_config(config)

    def _validate_numerics_config(self, numerics: NumericsConfig) -> None:
        for key in ("sup_tol", "invertibility_tol", "ap_window", "ap_grid_density"):
            if getattr(numerics, key) <= 0:
                raise ConfigurationError(f"numerics.{key} must be greater than 0")

        if numerics.invertibility_tol >= 1:
            raise ConfigurationError("numerics.invertibility_tol must be below 1")

        if numerics.initial_grid < 16:
            raise ConfigurationError("numerics.initial_grid must be at least 16")

        if numerics.max_grid < numerics.initial_grid:
            raise ConfigurationError("numerics.max_grid cannot be smaller than numerics.initial_grid")

        if numerics.max_grid > 2**24:
            raise ConfigurationError("numerics.max_grid should not exceed 2**24 samples")

        if numerics.refinement_depth < 0 or numerics.refinement_depth > 60:
            raise ConfigurationError("numerics.refinement_depth must lie between 0 and 60")

        if numerics.polish_candidates <= 0:
            raise ConfigurationError("numerics.polish_candidates must be greater than 0")

        radii = numerics.annulus_radii
        if len(radii) < 3:
            raise ConfigurationError("numerics.annulus_radii needs at least 3 radii")
        if any(not (0.0 < r < 1.0) for r in radii):
            raise ConfigurationError("numerics.annulus_radii must lie in (0, 1)")
        if any(b <= a for a, b in zip(radii, radii[1:])):
            raise ConfigurationError("numerics.annulus_radii must be strictly increasing")

    def _validate_processing_config(self, config: AppConfig) -> None:
        if config.threads is not None:
            if config.threads <= 0:
                raise ConfigurationError("processing.threads must be greater than 0")
            if config.threads > 64:
                raise ConfigurationError("processing.threads should not exceed 64")


def load_app_config(config_path: Optional[Path] = None) -> AppConfig:
    """Load a configuration file, or the defaults when no path is given."""
    manager = ConfigManager()
    if config_path is None:
        return manager.default_config()
    return manager.load_config(config_path)
