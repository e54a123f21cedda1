"""Byte-stable report serialization: structured JSON text and a flat CSV table."""

from __future__ import annotations

import csv
import io
import json
import math
from typing import Any

CSV_HEADER = ("section", "name", "verdict", "residual_max", "residual_mean", "tolerance")


def format_real(v: float) -> str:
    """17 significant digits; integral values keep a trailing '.0' so they parse back as reals."""
    if not math.isfinite(v):
        return "null"
    text = format(v, ".17g")
    if not any(ch in text for ch in ".en"):
        text += ".0"
    return text


def _json(value: Any, indent: int, out: list[str]) -> None:
    pad = "  " * indent
    if value is None:
        out.append("null")
    elif isinstance(value, bool):
        out.append("true" if value else "false")
    elif isinstance(value, int):
        out.append(str(value))
    elif isinstance(value, float):
        out.append(format_real(value))
    elif isinstance(value, str):
        out.append(json.dumps(value, ensure_ascii=False))
    elif isinstance(value, dict):
        if not value:
            out.append("{}")
            return
        out.append("{\n")
        for i, (k, v) in enumerate(value.items()):
            out.append(f"{pad}  {json.dumps(str(k), ensure_ascii=False)}: ")
            _json(v, indent + 1, out)
            out.append(",\n" if i < len(value) - 1 else "\n")
        out.append(pad + "}")
    elif isinstance(value, (list, tuple)):
        if not value:
            out.append("[]")
            return
        if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
            parts = []
            for v in value:
                piece: list[str] = []
                _json(v, 0, piece)
                parts.append("".join(piece))
            out.append("[" + ", ".join(parts) + "]")
            return
        out.append("[\n")
        for i, v in enumerate(value):
            out.append(pad + "  ")
            _json(v, indent + 1, out)
            out.append(",\n" if i < len(value) - 1 else "\n")
        out.append(pad + "]")
    elif hasattr(value, "tolist"):
        _json(value.tolist(), indent, out)
    else:
        raise TypeError(f"cannot serialize {type(value).__name__}")


def to_json(report: dict[str, Any]) -> str:
    out: list[str] = []
    _json(report, 0, out)
    out.append("\n")
    return "".join(out)


def csv_rows(report: dict[str, Any]) -> list[tuple[str, ...]]:
    rows = []
    for f in report.get("flags", []):
        tol = report["config"]["tolerance_zero"]
        rows.append(("flag", f["flag"], f["verdict"], format_real(f["residual_max"]),
                     format_real(f["residual_mean"]), format_real(tol)))
    for row in report.get("cross_validation", []):
        rows.append(("cross_validation", row["quantity"], "consistent" if row["consistent"] else "inconsistent",
                     format_real(row["max_deviation"]), format_real(row["mean_deviation"]),
                     format_real(row["tolerance"])))
    return rows


def to_csv(report: dict[str, Any]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    writer.writerows(csv_rows(report))
    return buf.getvalue()


def emit_report(report: dict[str, Any], fmt: str = "json") -> bytes:
    if fmt == "json":
        return to_json(report).encode("utf-8")
    if fmt == "csv":
        return to_csv(report).encode("utf-8")
    raise ValueError(f"unknown report format {fmt!r}; expected 'json' or 'csv'")
