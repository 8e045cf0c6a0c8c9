"""Deterministic text output helpers.

All files the lab writes go through these functions so that reruns with the
same configuration are byte-identical: '.' decimal separator, '\n' line
endings, floats at 17 significant digits (round-trip exact for float64),
no timestamps.
"""

from __future__ import annotations

import os


def format_float(x) -> str:
    """17 significant digits; parses back to the identical float64."""
    x = float(x)
    return format(x, ".17g")


def format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format_float(v)
    return str(v)


def write_text(path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)


def write_table(path, columns, rows, comment: str = "") -> None:
    """CSV with an optional leading '#' comment naming what the file shows."""
    lines = []
    if comment:
        for part in comment.splitlines():
            lines.append(f"# {part}")
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(format_value(v) for v in row))
    write_text(path, "\n".join(lines) + "\n")


def write_keyvalues(path, pairs, comment: str = "") -> None:
    lines = []
    if comment:
        for part in comment.splitlines():
            lines.append(f"# {part}")
    for k, v in pairs:
        lines.append(f"{k} = {format_value(v)}")
    write_text(path, "\n".join(lines) + "\n")
