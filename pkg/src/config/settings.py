"""
Configuration management for nilorbit runs.

This module holds every tunable of a run (which subcommand, its inputs, the
numeric levels and the search limits), validates them before dispatch and
reads/writes them as JSON documents.
"""

import json
import logging
from dataclasses import asdict, dataclass, fields
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

from ..utils.errors import ValidationError
from ..utils.scalars import MIN_PRECISION_BITS

logger = logging.getLogger(__name__)

SUBCOMMANDS = ("weyl", "dichotomy", "check", "dioph", "cover", "zeros", "nil", "verify")
DIOPH_ACTIONS = ("best-multiplier", "obstruction", "interval", "proposition", "dichotomy")
OUTPUT_FORMATS = ("json", "csv")


@dataclass
class ExperimentConfig:
    """Configuration class for one nilorbit run."""

    # Dispatch
    subcommand: str = "verify"
    action: Optional[str] = None

    # Input documents
    poly: Optional[str] = None
    instance: Optional[str] = None
    spec: Optional[str] = None
    seq: Optional[str] = None
    certificate: Optional[str] = None

    # Box and levels
    box: Optional[str] = None
    symmetric: bool = False
    delta: str = "0.3"
    epsilon: Optional[str] = None
    cutoff: Optional[int] = None
    bound: str = "10,3"

    # Scalar arguments of single-shot operations
    alpha: Optional[str] = None
    Q: Optional[int] = None
    L: Optional[int] = None
    N: Optional[int] = None

    # Randomized suites
    suite: str = "all"
    seed: int = 0
    trials: int = 20

    # Output
    output: Optional[str] = None
    output_format: str = "json"
    strict: bool = False

    # Numerics and limits
    precision_bits: int = 128
    workers: Optional[int] = None
    grid_constant: str = "1/40"
    density_limit: int = 10_000_000
    exhaustive_limit: int = 1_000_000
    offset_samples: int = 64
    vertical_samples: int = 4
    cover_constant: str = "1"

    # Logging settings
    log_level: str = "INFO"
    log_file: Optional[str] = None

    def __post_init__(self):
        """Validate configuration after initialization."""
        self._validate_settings()

    def _validate_settings(self) -> None:
        """Validate all configuration settings."""
        if self.subcommand not in SUBCOMMANDS:
            raise ValidationError(
                f"unknown subcommand '{self.subcommand}', expected one of {', '.join(SUBCOMMANDS)}"
            )

        if self.subcommand == "dioph" and self.action not in DIOPH_ACTIONS:
            raise ValidationError(
                f"dioph needs an action from {', '.join(DIOPH_ACTIONS)}, got '{self.action}'"
            )

        delta = self.delta_value
        if self.subcommand == "dichotomy" and self.epsilon is not None:
            # the near-constancy lift takes any density up to 1
            if not 0 < delta <= 1:
                raise ValidationError(f"delta must lie in (0, 1], got {self.delta}")
        elif not 0 < delta < Fraction(1, 2):
            raise ValidationError(f"delta must lie in (0, 1/2), got {self.delta}")

        if self.epsilon is not None and self.epsilon_value <= 0:
            raise ValidationError(f"epsilon must be positive, got {self.epsilon}")

        if self.cutoff is not None and self.cutoff < 1:
            raise ValidationError(f"cutoff must be >= 1, got {self.cutoff}")

        self.bound_pair  # parses or raises

        if self.trials < 1:
            raise ValidationError(f"trials must be >= 1, got {self.trials}")

        if self.output_format not in OUTPUT_FORMATS:
            raise ValidationError(
                f"output format must be one of {', '.join(OUTPUT_FORMATS)}, got '{self.output_format}'"
            )

        if self.precision_bits < MIN_PRECISION_BITS:
            raise ValidationError(
                f"precision must be at least {MIN_PRECISION_BITS} bits, got {self.precision_bits}"
            )

        if self.workers is not None and self.workers < 1:
            raise ValidationError(f"workers must be >= 1, got {self.workers}")

        if not 0 < self.grid_constant_value <= 1:
            raise ValidationError(f"grid constant must lie in (0, 1], got {self.grid_constant}")

        for name in ("density_limit", "exhaustive_limit", "offset_samples", "vertical_samples"):
            if getattr(self, name) < 1:
                raise ValidationError(f"{name} must be >= 1, got {getattr(self, name)}")

        if self.Q is not None and self.Q < 1:
            raise ValidationError(f"Q must be >= 1, got {self.Q}")

        if self.L is not None and self.L < 1:
            raise ValidationError(f"L must be >= 1, got {self.L}")

        if self.N is not None and self.N < 1:
            raise ValidationError(f"N must be >= 1, got {self.N}")

    @staticmethod
    def _rational(name: str, text: str) -> Fraction:
        try:
            return Fraction(str(text).strip())
        except (ValueError, ZeroDivisionError):
            raise ValidationError(f"{name} must be a rational or decimal number, got '{text}'")

    @property
    def delta_value(self) -> Fraction:
        """delta as an exact rational (0.3 is read as 3/10)."""
        return self._rational("delta", self.delta)

    @property
    def epsilon_value(self) -> Optional[Fraction]:
        if self.epsilon is None:
            return None
        return self._rational("epsilon", self.epsilon)

    @property
    def grid_constant_value(self) -> Fraction:
        return self._rational("grid constant", self.grid_constant)

    @property
    def cover_constant_value(self) -> Fraction:
        return self._rational("cover constant", self.cover_constant)

    @property
    def bound_pair(self) -> Tuple[Fraction, int]:
        """The bound family A*delta^-C as (A, C)."""
        parts = str(self.bound).split(",")
        if len(parts) != 2:
            raise ValidationError(f"bound must look like 'A,C', got '{self.bound}'")
        A = self._rational("bound constant A", parts[0])
        try:
            C = int(parts[1])
        except ValueError:
            raise ValidationError(f"bound exponent C must be an integer, got '{parts[1]}'")
        if A <= 0 or C < 0:
            raise ValidationError(f"bound needs A > 0 and C >= 0, got '{self.bound}'")
        return A, C

    @property
    def log_path(self) -> Optional[Path]:
        return Path(self.log_file) if self.log_file else None

    @classmethod
    def from_file(cls, config_path: Path, base: Optional["ExperimentConfig"] = None) -> "ExperimentConfig":
        """Load configuration from a JSON file.

        Values in the file override those of ``base`` (typically the
        command-line flags); keys the file does not mention keep the base value.
        """
        try:
            with open(config_path, "r", encoding="utf-8") as f:
                data = json.load(f)

            logger.info(f"Configuration loaded from {config_path}")

        except FileNotFoundError:
            raise ValidationError(f"config file {config_path} not found")

        except json.JSONDecodeError as e:
            logger.error(f"Invalid JSON in config file: {e}")
            raise ValidationError(f"invalid JSON in config file {config_path}: {e}")

        if not isinstance(data, dict):
            raise ValidationError(f"config file {config_path} must hold a JSON object")

        merged = asdict(base) if base is not None else {}
        known = {f.name for f in fields(cls)}
        for key, value in data.items():
            if key in known:
                merged[key] = value
            else:
                logger.warning(f"Unknown configuration key: {key}")
        return cls(**merged)

    def save_to_file(self, config_path: Path) -> None:
        """Save current configuration to JSON file."""
        try:
            config_path.parent.mkdir(parents=True, exist_ok=True)

            with open(config_path, "w", encoding="utf-8") as f:
                json.dump(asdict(self), f, indent=2, sort_keys=True)

            logger.info(f"Configuration saved to {config_path}")

        except OSError as e:
            logger.error(f"Error saving config: {e}")
            raise

    def update_settings(self, **kwargs) -> None:
        """Update configuration settings dynamically."""
        for key, value in kwargs.items():
            if hasattr(self, key):
                setattr(self, key, value)
                logger.debug(f"Updated {key} to {value}")
            else:
                logger.warning(f"Unknown configuration key: {key}")

        self._validate_settings()

    def echo(self) -> Dict[str, Any]:
        """Settings that determine a report body (logging and output paths excluded)."""
        data = asdict(self)
        for key in ("log_level", "log_file", "output", "workers"):
            data.pop(key)
        return data

    def __str__(self) -> str:
        """String representation of configuration."""
        return (
            f"ExperimentConfig("
            f"command={self.subcommand}{' ' + self.action if self.action else ''}, "
            f"box={self.box}, "
            f"delta={self.delta}, "
            f"bound={self.bound}, "
            f"seed={self.seed}"
            f")"
        )
