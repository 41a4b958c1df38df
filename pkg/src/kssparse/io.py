"""Text formats: CSV/whitespace matrices, decomposition and weight JSON.

Every float is written with 17 significant digits, enough to round-trip a
binary64 value exactly.
"""

from __future__ import annotations

import hashlib
import json
import math
import re

import numpy as np

__all__ = [
    "FormatError",
    "parse_matrix",
    "read_matrix",
    "format_matrix",
    "write_matrix",
    "dumps",
    "parse_decomposition",
    "read_decomposition",
    "parse_weights",
    "read_weights",
    "file_digest",
]

_SEP = re.compile(r"[,\s]+")


class FormatError(ValueError):
    pass


def fmt_float(x):
    x = float(x)
    if not math.isfinite(x):
        raise FormatError(f"cannot serialise non-finite value {x!r}")
    s = format(x, ".17g")
    # keep floats recognisable as floats in JSON
    if "e" not in s and "." not in s and "n" not in s:
        s += ".0"
    return s


def parse_matrix(text):
    """Parse one row per line, entries split by commas and/or whitespace; ``#`` lines are comments."""
    rows = []
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        fields = [f for f in _SEP.split(stripped) if f]
        try:
            row = [float(f) for f in fields]
        except ValueError as exc:
            raise FormatError(f"line {lineno}: {exc}") from None
        if rows and len(row) != len(rows[0]):
            raise FormatError(f"line {lineno}: ragged row ({len(row)} entries, expected {len(rows[0])})")
        rows.append(row)
    if not rows:
        raise FormatError("no matrix rows found")
    M = np.array(rows, dtype=np.float64)
    if not np.all(np.isfinite(M)):
        raise FormatError("matrix has non-finite entries")
    return M


def read_matrix(path):
    with open(path, encoding="utf-8") as fh:
        return parse_matrix(fh.read())


def format_matrix(M):
    M = np.atleast_2d(np.asarray(M, dtype=np.float64))
    return "".join(",".join(fmt_float(x) for x in row) + "\n" for row in M)


def write_matrix(M, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_matrix(M))


def _encode(obj, indent, level):
    pad = " " * (indent * (level + 1)) if indent else ""
    end = " " * (indent * level) if indent else ""
    nl = "\n" if indent else ""
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return json.dumps(None if obj is None else bool(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{" + nl + ("," + nl).join(items) + nl + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        # numeric rows stay on one line
        if all(isinstance(x, (int, float, np.integer, np.floating)) and not isinstance(x, bool) for x in obj):
            return "[" + ", ".join(_encode(x, 0, 0) for x in obj) + "]"
        items = [pad + _encode(v, indent, level + 1) for v in obj]
        return "[" + nl + ("," + nl).join(items) + nl + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj, indent=2):
    """JSON text with every float at 17 significant digits."""
    return _encode(obj, indent, 0)


def parse_decomposition(text):
    """Parse ``{"dim": n, "points": [[...], ...], "weights": [...]}``; returns ``(points, weights)``."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON: {exc}") from None
    if not isinstance(data, dict) or not {"dim", "points", "weights"} <= data.keys():
        raise FormatError('decomposition JSON needs "dim", "points" and "weights"')
    dim = data["dim"]
    if not isinstance(dim, int) or dim < 1:
        raise FormatError('"dim" must be a positive integer')
    try:
        X = np.array(data["points"], dtype=np.float64)
        c = np.array(data["weights"], dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise FormatError(f"bad numeric data: {exc}") from None
    if X.ndim != 2 or X.shape[1] != dim:
        raise FormatError(f'"points" must be a list of length-{dim} vectors')
    if c.ndim != 1 or c.size != X.shape[0]:
        raise FormatError('"weights" must have one entry per point')
    return X, c


def read_decomposition(path):
    with open(path, encoding="utf-8") as fh:
        return parse_decomposition(fh.read())


def parse_weights(text):
    """Parse ``{"weights": [...]}``; rejects negative or non-finite entries."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON: {exc}") from None
    if not isinstance(data, dict) or "weights" not in data:
        raise FormatError('D JSON needs a "weights" list')
    try:
        w = np.array(data["weights"], dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise FormatError(f"bad weights: {exc}") from None
    if w.ndim != 1:
        raise FormatError('"weights" must be a flat list')
    if not np.all(np.isfinite(w)):
        raise FormatError("weights must be finite")
    if np.any(w < 0):
        raise FormatError("weights must be non-negative")
    return w


def read_weights(path):
    with open(path, encoding="utf-8") as fh:
        return parse_weights(fh.read())


def file_digest(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()
