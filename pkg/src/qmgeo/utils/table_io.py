"""
Table I/O: versioned CSV tables, JSON summaries and atomic file writes.

Every CSV written by qmgeo starts with one comment line naming its schema::

    # schema: qmgeo.metrics/1

Readers reject files whose schema name differs from the one requested or
whose version is not the current one.  ε columns (any column whose name
starts with ``eps``) are written with 6 significant digits and infinities as
the literal ``+inf``.
"""

from __future__ import annotations

import io
import json
import logging
import math
import os
import re
import tempfile
from pathlib import Path
from typing import Any, Optional, Union

import numpy as np
import pandas as pd

from ..constants import CSV_SCHEMA_PREFIX, CSV_SCHEMAS, EPS_SIGNIFICANT_DIGITS, INF_LITERAL
from ..errors import DataError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

_SCHEMA_RE = re.compile(r"^# schema: (?P<name>[\w.]+)/(?P<version>\d+)\s*$")


# ── Formatting ──────────────────────────────────────────────────────


def format_eps(value: float) -> str:
    """ε at 6 significant digits; ``+inf`` for infinity, ``nan`` for NaN."""
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return INF_LITERAL if value > 0 else "-inf"
    return f"{value:.{EPS_SIGNIFICANT_DIGITS}g}"


def _format_frame(df: pd.DataFrame) -> pd.DataFrame:
    out = df.copy()
    for col in out.columns:
        if str(col).startswith("eps"):
            out[col] = [format_eps(v) for v in out[col]]
    return out


def jsonable(obj: Any) -> Any:
    """Recursively convert numpy scalars/arrays and non-finite floats for JSON."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        if math.isnan(value):
            return None
        if math.isinf(value):
            return INF_LITERAL if value > 0 else "-inf"
        return value
    return obj


# ── Writing ─────────────────────────────────────────────────────────


def atomic_write_text(path: PathLike, text: str) -> Path:
    """Write *text* to *path* through a temp file in the same directory plus rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=str(path.parent))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    logger.info("Wrote %s", path)
    return path


def schema_line(schema: str) -> str:
    """Header comment for *schema* at its current version."""
    if schema not in CSV_SCHEMAS:
        raise KeyError(f"unknown table schema {schema!r}")
    return f"{CSV_SCHEMA_PREFIX}{schema}/{CSV_SCHEMAS[schema]}\n"


def table_to_csv(df: pd.DataFrame, schema: str) -> str:
    """Render *df* as schema-tagged CSV text."""
    body = _format_frame(df).to_csv(index=False, lineterminator="\n", na_rep="nan")
    return schema_line(schema) + body


def write_table(df: pd.DataFrame, path: PathLike, schema: str) -> Path:
    """Atomically write *df* as a schema-tagged CSV."""
    return atomic_write_text(path, table_to_csv(df, schema))


def write_json(obj: Any, path: PathLike) -> Path:
    """Atomically write *obj* as indented JSON (non-finite floats made explicit)."""
    text = json.dumps(jsonable(obj), indent=2, allow_nan=False) + "\n"
    return atomic_write_text(path, text)


# ── Reading ─────────────────────────────────────────────────────────


def _parse_column(col: pd.Series, name: str, path: str) -> pd.Series:
    values = list(col)
    if all(v in ("True", "False") for v in values):
        return pd.Series([v == "True" for v in values], name=name, dtype=bool)
    parsed = []
    for i, v in enumerate(values):
        try:
            # float() accepts "+inf", "inf" and "nan" directly
            parsed.append(float(v))
        except (TypeError, ValueError):
            raise DataError(f"column {name!r}: cannot parse {v!r} as a number", path, i + 3) from None
    series = pd.Series(parsed, name=name, dtype=float)
    if all(re.fullmatch(r"[+-]?\d+", str(v)) for v in values):
        series = series.astype(np.int64)
    return series


def read_table(path: PathLike, schema: str) -> pd.DataFrame:
    """Read a schema-tagged CSV, rejecting other schemas and unknown versions."""
    path = Path(path)
    if not path.is_file():
        raise DataError("file not found", str(path))
    with open(path, "r", encoding="utf-8") as fh:
        first = fh.readline()
    match = _SCHEMA_RE.match(first)
    if match is None:
        raise DataError(f"missing schema header; expected '{schema_line(schema).strip()}'", str(path), 1)
    name, version = match.group("name"), int(match.group("version"))
    if name != schema:
        raise DataError(f"schema {name!r} where {schema!r} was expected", str(path), 1)
    if version != CSV_SCHEMAS[schema]:
        raise DataError(f"unsupported {schema} schema version {version}", str(path), 1)

    try:
        raw = pd.read_csv(path, skiprows=1, dtype=str, keep_default_na=False)
    except pd.errors.ParserError as exc:
        raise DataError(f"malformed CSV: {exc}", str(path)) from exc
    return pd.DataFrame({c: _parse_column(raw[c], c, str(path)) for c in raw.columns})


def read_vector(path: PathLike, column: Optional[str] = None) -> np.ndarray:
    """Read a single column of reals; a non-numeric first row is treated as a header.

    Blank lines and ``#`` comments are skipped; errors report the line number
    in the file as written.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError("file not found", str(path))
    line_numbers, rows = [], []
    with path.open(encoding="utf-8") as fh:
        for number, line in enumerate(fh, start=1):
            content = line.split("#", 1)[0].strip()
            if content:
                line_numbers.append(number)
                rows.append(content)
    if not rows:
        return np.empty(0, dtype=float)
    try:
        raw = pd.read_csv(io.StringIO("\n".join(rows)), header=None, dtype=str, keep_default_na=False)
    except pd.errors.ParserError as exc:
        raise DataError(f"malformed CSV: {exc}", str(path)) from exc

    if raw.shape[1] != 1 and column is None:
        raise DataError(f"expected a single column, found {raw.shape[1]}", str(path))
    cells = list(raw.iloc[:, 0])
    if column is not None:
        header = [str(h).strip() for h in raw.iloc[0]]
        if column not in header:
            raise DataError(f"column {column!r} not found", str(path), line_numbers[0])
        cells = list(raw.iloc[1:, header.index(column)])
        line_numbers = line_numbers[1:]
    else:
        try:
            float(cells[0])
        except ValueError:
            cells = cells[1:]
            line_numbers = line_numbers[1:]

    out = np.empty(len(cells), dtype=float)
    for i, (cell, number) in enumerate(zip(cells, line_numbers)):
        try:
            out[i] = float(cell)
        except ValueError:
            raise DataError(f"cannot parse {cell!r} as a real", str(path), number) from None
    return out
