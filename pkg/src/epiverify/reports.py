"""Deterministic report serialization.

Reports must byte-reproduce under a fixed seed, so floats are rendered with
17 significant digits (enough to round-trip any finite float64) by a small
JSON writer instead of the stdlib encoder, whose float formatting cannot be
overridden.  CSV cells use the same float format.
"""

from __future__ import annotations

import json
from dataclasses import asdict, is_dataclass

import numpy as np

from .entropy import DivergenceEstimate, EntropyEstimate
from .epi import EpiReport, Measurement

__all__ = [
    "format_float",
    "render_json",
    "to_jsonable",
    "write_csv_text",
    "EPI_CSV_HEADER",
    "epi_csv_row",
]

EPI_CSV_HEADER = (
    "scenario_id",
    "lambda",
    "lhs",
    "lhs_se",
    "rhs",
    "rhs_se",
    "total_gap",
    "gap_se",
    "cond_gap",
    "cond_se",
    "jensen_gap",
    "jensen_se",
    "shannon_lhs",
    "shannon_rhs",
)


def format_float(value: float) -> str:
    value = float(value)
    if not np.isfinite(value):
        raise ValueError(f"reports must contain finite numbers, got {value!r}")
    return format(value, ".17g")


def to_jsonable(obj):
    """Recursively reduce package objects to plain dict/list/scalar form."""
    if isinstance(obj, (EntropyEstimate, DivergenceEstimate, Measurement, EpiReport)):
        return to_jsonable(asdict(obj))
    if is_dataclass(obj) and not isinstance(obj, type):
        return to_jsonable(asdict(obj))
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (bool, int, float, str)) or obj is None:
        return obj
    raise TypeError(f"cannot serialize object of type {type(obj).__name__}")


def _render(obj, indent: int, out: list):
    pad = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        for i, (key, value) in enumerate(obj.items()):
            out.append(f"{pad}  {json.dumps(str(key))}: ")
            _render(value, indent + 1, out)
            out.append(",\n" if i + 1 < len(obj) else "\n")
        out.append(pad + "}")
    elif isinstance(obj, list):
        if not obj:
            out.append("[]")
            return
        out.append("[\n")
        for i, value in enumerate(obj):
            out.append(pad + "  ")
            _render(value, indent + 1, out)
            out.append(",\n" if i + 1 < len(obj) else "\n")
        out.append(pad + "]")
    elif isinstance(obj, bool):
        out.append("true" if obj else "false")
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, float):
        out.append(format_float(obj))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif obj is None:
        out.append("null")
    else:
        raise TypeError(f"cannot render object of type {type(obj).__name__}")


def render_json(obj) -> str:
    """Serialize to indented JSON with 17-significant-digit floats."""
    out: list = []
    _render(to_jsonable(obj), 0, out)
    out.append("\n")
    return "".join(out)


def write_csv_text(header, rows) -> str:
    """CSV text with 17-significant-digit float cells and a trailing newline."""
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for cell in row:
            if isinstance(cell, bool):
                cells.append("true" if cell else "false")
            elif isinstance(cell, (float, np.floating)):
                cells.append(format_float(cell))
            elif isinstance(cell, (int, np.integer)):
                cells.append(str(int(cell)))
            else:
                cells.append(str(cell))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def epi_csv_row(scenario_id: str, report: EpiReport) -> tuple:
    return (
        scenario_id,
        report.lam,
        report.lhs.value,
        report.lhs.std_error,
        report.rhs.value,
        report.rhs.std_error,
        report.total_gap.value,
        report.total_gap.std_error,
        report.conditioning_gap.value,
        report.conditioning_gap.std_error,
        report.jensen_gap.value,
        report.jensen_gap.std_error,
        report.shannon_lhs_power,
        report.shannon_rhs_power,
    )
