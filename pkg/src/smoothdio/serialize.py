"""Deterministic text output: 15 significant digits for reals, ``p/q`` for exact rationals."""

from __future__ import annotations

import csv
import io
import json
import math
from fractions import Fraction
from typing import Any, Iterable

import numpy as np

SCHEMA = 1


def fmt_real(x: float) -> str:
    return format(float(x), ".15g")


def jsonable(obj: Any) -> Any:
    """Recursively convert to JSON-ready values with the package's number policy."""
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return str(x)
        return float(fmt_real(x))
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}"
    if isinstance(obj, complex):
        return [jsonable(obj.real), jsonable(obj.imag)]
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)


def json_line(record: dict, schema: bool = True) -> str:
    body = jsonable(record)
    if schema:
        body = {"schema": SCHEMA, **body}
    return json.dumps(body, separators=(",", ":"))


def csv_cell(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return fmt_real(v)
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    return str(v)


def csv_lines(header: Iterable[str], rows: Iterable[Iterable[Any]]) -> list[str]:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(list(header))
    writer.writerows([csv_cell(v) for v in row] for row in rows)
    return buf.getvalue().splitlines()
