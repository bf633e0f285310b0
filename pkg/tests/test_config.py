"""Tests for run configuration."""

from pathlib import Path

import pytest

from nestlab.config import OutputFormat, RunConfig, env_var, load_config_file
from nestlab.errors import ConfigError


class TestRunConfig:
    """Tests for RunConfig."""

    def test_defaults(self) -> None:
        """Test default values."""
        config = RunConfig()
        assert config.precision_bits == 256
        assert config.depth == 12
        assert config.output_format is OutputFormat.JSON
        assert config.output_path is None
        assert config.eta_config is None

    def test_format_from_string(self) -> None:
        """Test that formats given as text are converted."""
        config = RunConfig(output_format="csv")  # type: ignore[arg-type]
        assert config.output_format is OutputFormat.CSV

    def test_unknown_format(self) -> None:
        """Test an unknown output format."""
        with pytest.raises(ConfigError, match="Unknown output format"):
            RunConfig(output_format="xml")  # type: ignore[arg-type]

    @pytest.mark.parametrize(
        ("field", "value", "message"),
        [
            ("precision_bits", 32, "precision_bits must be at least 64"),
            ("depth", -1, "depth must be non-negative"),
            ("max_iter", 0, "max_iter must be positive"),
            ("samples", -5, "samples must be non-negative"),
            ("steps", 0, "steps must be positive"),
            ("seed", -1, "seed must be non-negative"),
            ("tau", -0.5, "tau must be non-negative"),
            ("eta_config", -0.1, "eta_config must be non-negative"),
        ],
    )
    def test_out_of_range(self, field: str, value: float, message: str) -> None:
        """Test validation of each numeric setting."""
        with pytest.raises(ConfigError, match=message):
            RunConfig(**{field: value})

    def test_from_mapping_coerces(self) -> None:
        """Test text values from files and environment variables."""
        config = RunConfig.from_mapping({"precision_bits": "512", "tau": "0.25", "depth": None})
        assert config.precision_bits == 512
        assert config.tau == 0.25
        assert config.depth == 12

    def test_from_mapping_unknown_key(self) -> None:
        """Test a misspelled key."""
        with pytest.raises(ConfigError, match="Unknown configuration key: 'precision'"):
            RunConfig.from_mapping({"precision": 128})

    def test_from_mapping_bad_value(self) -> None:
        """Test a value that is not a number."""
        with pytest.raises(ConfigError, match="Invalid value for depth"):
            RunConfig.from_mapping({"depth": "deep"})

    def test_env_var(self) -> None:
        """Test environment variable names."""
        assert env_var("precision_bits") == "NESTLAB_PRECISION_BITS"


class TestConfigFile:
    """Tests for key=value files."""

    def test_load(self, tmp_path: Path) -> None:
        """Test comments, blank lines and dashed keys."""
        path = tmp_path / "nestlab.conf"
        path.write_text("# walk settings\nsamples = 50\n\nprecision-bits=128  # coarse\n")
        assert load_config_file(path) == {"samples": "50", "precision_bits": "128"}

    def test_missing_equals(self, tmp_path: Path) -> None:
        """Test a line without a value."""
        path = tmp_path / "nestlab.conf"
        path.write_text("samples 50\n")
        with pytest.raises(ConfigError, match=":1: expected key=value"):
            load_config_file(path)

    def test_missing_file(self, tmp_path: Path) -> None:
        """Test an unreadable file."""
        with pytest.raises(ConfigError, match="Cannot read configuration file"):
            load_config_file(tmp_path / "absent.conf")

    def test_round_trip_into_config(self, tmp_path: Path) -> None:
        """Test building a configuration from a file."""
        path = tmp_path / "nestlab.conf"
        path.write_text("samples=50\noutput-format=csv\n")
        config = RunConfig.from_mapping(load_config_file(path))
        assert config.samples == 50
        assert config.output_format is OutputFormat.CSV
