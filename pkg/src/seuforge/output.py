"""Deterministic delimited output.

Every number is rendered with a fixed count of significant digits through
repr-stable formatting, newlines are always "\\n", and rows are written in
the order given, so identical inputs produce byte-identical files.
"""

from __future__ import annotations

import math
from pathlib import Path

DEFAULT_PRECISION = 9


def format_value(value, precision: int = DEFAULT_PRECISION) -> str:
    if isinstance(value, str):
        if any(c in value for c in ',"\n'):
            return '"' + value.replace('"', '""') + '"'
        return value
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    v = float(value)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.{precision}g}"


def write_csv(path: str | Path, header, rows,
              precision: int = DEFAULT_PRECISION) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_value(v, precision) for v in row))
    path.write_text("\n".join(lines) + "\n", newline="\n")
    return path
