"""Point-set ingestion and result serialisation.

Exact rationals are written as ``"num/den"`` strings (plain integers when
the denominator is 1) so nothing ever passes through a float. Floats use
Python's shortest round-trip ``repr``.
"""

from __future__ import annotations

import csv
import json
import math
from fractions import Fraction
from pathlib import Path

from hartigan_lab.geometry import PointSet


class ParseError(ValueError):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = []
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column}")
        prefix = ", ".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)


def format_scalar(v) -> str:
    if isinstance(v, Fraction):
        return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    if isinstance(v, int):
        return str(v)
    return repr(float(v))


def scalar_ratio(v) -> tuple:
    """``(numerator, denominator)`` of an exact or float scalar, exactly."""
    if isinstance(v, Fraction):
        return v.numerator, v.denominator
    if isinstance(v, int):
        return v, 1
    return float(v).as_integer_ratio()


def _parse_number(text: str, exact: bool):
    s = text.strip()
    if not s:
        raise ValueError("empty field")
    if exact:
        v = Fraction(s)
    else:
        if "/" in s:
            v = float(Fraction(s))
        else:
            v = float(s)
        if not math.isfinite(v):
            raise ValueError("non-finite value")
    return v


def _is_number(text: str) -> bool:
    try:
        _parse_number(text, True)
        return True
    except (ValueError, ZeroDivisionError):
        return False


def parse_csv_text(text: str, exact: bool = True) -> PointSet:
    """One point per row, ``d`` numeric columns, optional header row."""
    rows = []
    dim = None
    header_seen = False
    for lineno, fields in enumerate(csv.reader(text.splitlines()), start=1):
        if not fields or all(not f.strip() for f in fields):
            continue
        if not rows and not header_seen and not any(_is_number(f) for f in fields):
            header_seen = True
            continue
        row = []
        for col, f in enumerate(fields, start=1):
            try:
                row.append(_parse_number(f, exact))
            except (ValueError, ZeroDivisionError):
                raise ParseError(f"{f.strip()!r} is not a number", lineno, col) from None
        if dim is None:
            dim = len(row)
        elif len(row) != dim:
            raise ParseError(f"row has {len(row)} columns, expected {dim}", lineno)
        rows.append(tuple(row))
    if not rows:
        raise ParseError("no points found")
    return PointSet(tuple(rows), dim, exact)


def parse_json_text(text: str, exact: bool = True) -> PointSet:
    """A JSON array of arrays; entries may be numbers or ``"num/den"`` strings."""
    try:
        data = json.loads(text, parse_float=str, parse_int=str)
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, e.lineno, e.colno) from None
    if not isinstance(data, list) or not data:
        raise ParseError("expected a non-empty array of points")
    rows = []
    dim = None
    for i, item in enumerate(data):
        if not isinstance(item, list):
            raise ParseError(f"point {i} is not an array")
        row = []
        for j, f in enumerate(item):
            if not isinstance(f, str):
                raise ParseError(f"point {i}, coordinate {j}: {f!r} is not a number")
            try:
                row.append(_parse_number(f, exact))
            except (ValueError, ZeroDivisionError):
                raise ParseError(f"point {i}, coordinate {j}: {f!r} is not a number") from None
        if dim is None:
            dim = len(row)
        elif len(row) != dim:
            raise ParseError(f"point {i} has {len(row)} coordinates, expected {dim}")
        rows.append(tuple(row))
    if dim == 0:
        raise ParseError("points must have at least one coordinate")
    return PointSet(tuple(rows), dim, exact)


def parse_points(path, fmt: str = None, exact: bool = True) -> PointSet:
    """Read a point set from a CSV or JSON file (format inferred from the suffix)."""
    path = Path(path)
    if fmt is None:
        fmt = "json" if path.suffix.lower() == ".json" else "csv"
    text = path.read_text()
    if not text.strip():
        raise ParseError(f"{path} is empty")
    if fmt.lower() == "json":
        return parse_json_text(text, exact)
    if fmt.lower() == "csv":
        return parse_csv_text(text, exact)
    raise ValueError(f"unknown point format {fmt!r}")


def points_to_csv(points: PointSet) -> str:
    return "".join(",".join(format_scalar(c) for c in p) + "\n" for p in points)


def write_points_csv(points: PointSet, path) -> None:
    Path(path).write_text(points_to_csv(points))


def move_record(index: int, move, role=None) -> dict:
    num, den = scalar_ratio(move.gain)
    return {
        "index": index,
        "point_id": move.point,
        "role": role,
        "src": move.src,
        "dst": move.dst,
        "gain_num": num,
        "gain_den": den,
    }


def dumps_line(record: dict) -> str:
    return json.dumps(record, separators=(",", ":"), sort_keys=False) + "\n"


def dump_json(obj, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
