"""JSON and CSV emitters.

JSON documents carry ``schema_version`` and ``precision_bits``; arbitrary
precision numbers are written as decimal strings with every digit the
precision supports. CSV output always uses ``.`` as decimal point and
``\\n`` line endings, whatever the locale.
"""

from __future__ import annotations

import csv
import io
import json
import math
from collections.abc import Iterable, Sequence
from pathlib import Path
from typing import Any

import click

from nestlab.cubic import working_context

SCHEMA_VERSION = 1


def decimal_digits(precision_bits: int) -> int:
    """Significant decimal digits carried by ``precision_bits`` bits."""
    return math.ceil(precision_bits * math.log10(2))


def to_decimal(value: Any, precision_bits: int) -> str:
    """Format a number as a decimal string at full precision.

    Example:
        >>> to_decimal(0.5, 64)
        '0.5'
    """
    if value is None:
        return ""
    if isinstance(value, bool | int | str):
        return str(value)
    ctx = working_context(precision_bits)
    return str(ctx.nstr(ctx.mpf(value), decimal_digits(precision_bits)))


def document(payload: dict[str, Any], precision_bits: int) -> dict[str, Any]:
    """Wrap a payload with the schema header."""
    return {"schema_version": SCHEMA_VERSION, "precision_bits": precision_bits, **payload}


def dump_json(payload: dict[str, Any], precision_bits: int) -> str:
    return json.dumps(document(payload, precision_bits), indent=2) + "\n"


def dump_csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    """Render rows under a fixed header."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(["" if cell is None else cell for cell in row])
    return buffer.getvalue()


def write_text(text: str, path: str | Path | None) -> None:
    """Write to ``path``, or to standard output when ``path`` is ``None``."""
    if path is None:
        click.echo(text, nl=False)
        return
    Path(path).write_text(text, encoding="utf-8")
