"""Reading and writing matrix files.

Two formats are understood. JSON documents look like::

    {"rows": 2, "cols": 2, "entries": [[0.5, 0.0], [0.1, 0.0], [0.0, 0.0], [0.3, 0.0]]}

with one ``[re, im]`` pair per entry in row-major order. CSV files hold real
entries, one matrix row per line; imaginary parts are taken as zero.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, ParseError


def matrix_to_dict(a) -> dict:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2:
        raise DimensionMismatch(f"expected a 2-d matrix, got shape {a.shape}")
    return {
        "rows": int(a.shape[0]),
        "cols": int(a.shape[1]),
        "entries": [[float(z.real), float(z.imag)] for z in a.ravel()],
    }


def _as_count(doc: dict, key: str) -> int:
    value = doc.get(key)
    if isinstance(value, bool) or not isinstance(value, int) or value < 0:
        raise ParseError(f"{key!r} must be a non-negative integer, got {value!r}")
    return value


def matrix_from_dict(doc) -> np.ndarray:
    """Inverse of :func:`matrix_to_dict`.

    Raises
    ------
    ParseError
        If the document is not of the expected shape or has non-finite entries.
    DimensionMismatch
        If the number of entries differs from ``rows * cols``.
    """
    if not isinstance(doc, dict):
        raise ParseError("matrix document must be a JSON object")
    rows, cols = _as_count(doc, "rows"), _as_count(doc, "cols")
    entries = doc.get("entries")
    if not isinstance(entries, list):
        raise ParseError("'entries' must be a list of [re, im] pairs")
    if len(entries) != rows * cols:
        raise DimensionMismatch(f"{len(entries)} entries for a {rows}x{cols} matrix")
    values = []
    for i, pair in enumerate(entries):
        if not (isinstance(pair, list) and len(pair) == 2):
            raise ParseError(f"entry {i} is not an [re, im] pair: {pair!r}")
        re, im = pair
        if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in (re, im)):
            raise ParseError(f"entry {i} is not numeric: {pair!r}")
        if not (math.isfinite(re) and math.isfinite(im)):
            raise ParseError(f"entry {i} is not finite: {pair!r}")
        values.append(complex(re, im))
    return np.array(values, dtype=complex).reshape(rows, cols)


def parse_json(text: str) -> np.ndarray:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON: {exc}") from exc
    return matrix_from_dict(doc)


def parse_csv(text: str) -> np.ndarray:
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    if not rows:
        raise ParseError("empty CSV")
    width = len(rows[0])
    out = []
    for i, row in enumerate(rows):
        if len(row) != width:
            raise DimensionMismatch(f"CSV row {i} has {len(row)} fields, expected {width}")
        try:
            vals = [float(c) for c in row]
        except ValueError as exc:
            raise ParseError(f"CSV row {i}: {exc}") from exc
        if not all(math.isfinite(v) for v in vals):
            raise ParseError(f"CSV row {i} has non-finite entries")
        out.append(vals)
    return np.array(out, dtype=complex)


def read_matrix(path) -> np.ndarray:
    """Load a matrix from ``path``; ``.csv`` files are read as CSV, anything
    else as JSON.

    Raises
    ------
    OSError
        If the file cannot be read.
    ParseError, DimensionMismatch
        If the contents are invalid.
    """
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".csv":
        return parse_csv(text)
    return parse_json(text)


def write_matrix(path, a) -> None:
    path = Path(path)
    a = np.asarray(a, dtype=complex)
    if path.suffix.lower() == ".csv":
        if np.any(a.imag != 0):
            raise ValueError("CSV output requires a real matrix")
        with path.open("w", newline="") as fh:
            csv.writer(fh).writerows([[repr(float(v)) for v in row] for row in a.real])
    else:
        path.write_text(json.dumps(matrix_to_dict(a)))
