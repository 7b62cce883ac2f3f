"""Canonical JSON and CSV emission.

Reports are written so that identical inputs give byte-identical files:
keys are sorted, floats are printed with 17 significant digits (enough to
round-trip an IEEE double) and non-finite floats are spelled as strings.
"""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np


def format_float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    return format(x, ".17g")


def _plain(obj: Any) -> Any:
    if hasattr(obj, "to_dict"):
        return obj.to_dict()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _encode(obj: Any, indent: int, level: int) -> str:
    obj = _plain(obj)
    pad = "\n" + " " * (indent * (level + 1))
    end = "\n" + " " * (indent * level)
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return format_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [
            json.dumps(str(k), ensure_ascii=False) + ": " + _encode(obj[k], indent, level + 1)
            for k in sorted(obj, key=str)
        ]
        return "{" + pad + ("," + pad).join(items) + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [_encode(v, indent, level + 1) for v in obj]
        return "[" + pad + ("," + pad).join(items) + end + "]"
    raise TypeError(f"cannot encode {type(obj).__name__}")


def canonical_json(obj: Any, indent: int = 2) -> str:
    return _encode(obj, indent, 0) + "\n"


def parse_float(value: Any) -> float:
    """Inverse of :func:`format_float` for values read back from JSON."""
    if isinstance(value, str):
        return float(value)
    return float(value)


def digest(obj: Any) -> str:
    """SHA-256 of the canonical JSON form of ``obj``."""
    return hashlib.sha256(canonical_json(obj).encode("utf-8")).hexdigest()


def csv_text(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for v in row:
            v = _plain(v)
            if isinstance(v, float):
                cells.append(format_float(v).strip('"'))
            else:
                cells.append(str(v))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def emit_report(report: Any, path: str | Path, header: Sequence[str] | None = None) -> Path:
    """Write ``report`` to ``path``.

    With ``header`` the report is taken as CSV rows, otherwise as a JSON
    document.
    """
    path = Path(path)
    text = csv_text(header, report) if header is not None else canonical_json(report)
    path.write_bytes(text.encode("utf-8"))
    return path
