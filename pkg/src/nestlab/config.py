"""Run configuration.

Values come from, in decreasing priority: command-line flags, environment
variables ``NESTLAB_<FIELD>``, a ``key=value`` file and the defaults below.
The command line resolves the first three through click; this module owns
the defaults, the file format and validation.

Example:
    >>> from nestlab.config import RunConfig
    >>> RunConfig(depth=8).precision_bits
    256
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from enum import Enum
from pathlib import Path
from typing import Any

from nestlab.cubic import DEFAULT_PRECISION_BITS, MIN_PRECISION_BITS
from nestlab.errors import ConfigError
from nestlab.nest import DEFAULT_MAX_ITER

ENV_PREFIX = "NESTLAB"


class OutputFormat(str, Enum):
    JSON = "json"
    CSV = "csv"


@dataclass(frozen=True)
class RunConfig:
    """Settings shared by the commands.

    Attributes:
        precision_bits: Working precision of the maps.
        depth: Nest depth or sequence length to work to.
        max_iter: Iteration budget of each return search.
        samples: Number of walk samples.
        steps: Steps per walk sample.
        seed: Seed of the walk generators.
        eta_config: Fibonacci growth of the ledger; ``None`` for ``beta_0 / 32``.
        tau: Lower bound of the first central moduli.
        output_format: ``json`` or ``csv``.
        output_path: File to write, or ``None`` for standard output.

    Raises:
        ConfigError: If a value is out of range.
    """

    precision_bits: int = DEFAULT_PRECISION_BITS
    depth: int = 12
    max_iter: int = DEFAULT_MAX_ITER
    samples: int = 1000
    steps: int = 200
    seed: int = 0
    eta_config: float | None = None
    tau: float = 0.5
    output_format: OutputFormat = OutputFormat.JSON
    output_path: str | None = None

    def __post_init__(self) -> None:
        if self.precision_bits < MIN_PRECISION_BITS:
            raise ConfigError(
                f"precision_bits must be at least {MIN_PRECISION_BITS}, got {self.precision_bits}"
            )
        if self.depth < 0:
            raise ConfigError(f"depth must be non-negative, got {self.depth}")
        if self.max_iter < 1:
            raise ConfigError(f"max_iter must be positive, got {self.max_iter}")
        if self.samples < 0:
            raise ConfigError(f"samples must be non-negative, got {self.samples}")
        if self.steps < 1:
            raise ConfigError(f"steps must be positive, got {self.steps}")
        if self.seed < 0:
            raise ConfigError(f"seed must be non-negative, got {self.seed}")
        if self.tau < 0:
            raise ConfigError(f"tau must be non-negative, got {self.tau}")
        if self.eta_config is not None and self.eta_config < 0:
            raise ConfigError(f"eta_config must be non-negative, got {self.eta_config}")
        try:
            object.__setattr__(self, "output_format", OutputFormat(self.output_format))
        except ValueError:
            raise ConfigError(f"Unknown output format: {self.output_format!r}") from None

    @classmethod
    def from_mapping(cls, values: dict[str, Any]) -> RunConfig:
        """Build from loosely typed values, ignoring ``None`` entries.

        Raises:
            ConfigError: On unknown keys or values of the wrong type.
        """
        known = {f.name: f for f in fields(cls)}
        kwargs: dict[str, Any] = {}
        for key, value in values.items():
            if value is None:
                continue
            if key not in known:
                raise ConfigError(f"Unknown configuration key: {key!r}")
            kwargs[key] = _coerce(key, value)
        return cls(**kwargs)


_INT_FIELDS = {"precision_bits", "depth", "max_iter", "samples", "steps", "seed"}
_FLOAT_FIELDS = {"eta_config", "tau"}


def _coerce(key: str, value: Any) -> Any:
    try:
        if key in _INT_FIELDS:
            return int(value)
        if key in _FLOAT_FIELDS:
            return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"Invalid value for {key}: {value!r}") from None
    return value


def env_var(name: str) -> str:
    """Environment variable holding a setting, e.g. ``NESTLAB_PRECISION_BITS``."""
    return f"{ENV_PREFIX}_{name.upper()}"


def load_config_file(path: str | Path) -> dict[str, str]:
    """Read ``key=value`` lines.

    Blank lines and ``#`` comments are ignored; keys may use ``-`` or ``_``.

    Raises:
        ConfigError: On a line without ``=`` or an unreadable file.
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"Cannot read configuration file {path}: {e}") from e
    values: dict[str, str] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{path}:{number}: expected key=value, got {raw.strip()!r}")
        values[key.strip().replace("-", "_")] = value.strip()
    return values
