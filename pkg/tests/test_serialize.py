"""Tests for JSON and CSV output."""

import json
from pathlib import Path

import pytest

from nestlab.cubic import working_context
from nestlab.serialize import (
    SCHEMA_VERSION,
    decimal_digits,
    document,
    dump_csv,
    dump_json,
    to_decimal,
    write_text,
)


class TestDecimal:
    """Tests for full-precision decimal strings."""

    def test_digits(self) -> None:
        """Test digits carried by common precisions."""
        assert decimal_digits(64) == 20
        assert decimal_digits(128) == 39
        assert decimal_digits(256) == 78

    def test_exact_values(self) -> None:
        """Test values with short expansions."""
        assert to_decimal(0.5, 64) == "0.5"
        assert to_decimal(working_context(128).mpf("15.625"), 128) == "15.625"

    def test_full_precision(self) -> None:
        """Test that every supported digit is written."""
        third = working_context(128).mpf(1) / 3
        assert to_decimal(third, 128) == "0." + "3" * 39

    def test_passthrough(self) -> None:
        """Test integers, booleans, text and missing values."""
        assert to_decimal(7, 64) == "7"
        assert to_decimal(True, 64) == "True"
        assert to_decimal("ok", 64) == "ok"
        assert to_decimal(None, 64) == ""


class TestJson:
    """Tests for JSON documents."""

    def test_header(self) -> None:
        """Test the schema header."""
        payload = document({"status": "ok"}, 256)
        assert payload == {"schema_version": SCHEMA_VERSION, "precision_bits": 256, "status": "ok"}

    def test_dump(self) -> None:
        """Test the rendered document."""
        text = dump_json({"levels": [1, 2]}, 128)
        assert text.endswith("\n")
        assert json.loads(text) == {"schema_version": 1, "precision_bits": 128, "levels": [1, 2]}


class TestCsv:
    """Tests for CSV tables."""

    def test_rows(self) -> None:
        """Test header, rows and empty cells."""
        text = dump_csv(("n", "S", "status"), [(0, None, "ok"), (1, 2, "ok")])
        assert text == "n,S,status\n0,,ok\n1,2,ok\n"

    def test_header_only(self) -> None:
        """Test a table without rows."""
        assert dump_csv(("step", "beta"), []) == "step,beta\n"


class TestWriteText:
    """Tests for writing output."""

    def test_to_file(self, tmp_path: Path) -> None:
        """Test writing to a path."""
        path = tmp_path / "out.csv"
        write_text("a,b\n", path)
        assert path.read_text(encoding="utf-8") == "a,b\n"

    def test_to_stdout(self, capsys: pytest.CaptureFixture[str]) -> None:
        """Test writing to standard output."""
        write_text("hello\n", None)
        assert capsys.readouterr().out == "hello\n"
