"""Tabular data model and ingestion.

Cell values are plain Python objects: None (missing), float (always finite),
str, or bool. Tables are immutable; every operation returns a new Table.
Row order is significant and preserved by all loads.
"""

from __future__ import annotations

import csv
import io
import json
import math
import re
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

Value = Union[None, float, str, bool]

_NUMBER_RE = re.compile(r"[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$")


class TableError(ValueError):
    """Raised for malformed tabular input or bad row/column access."""


@dataclass(frozen=True)
class Column:
    name: str
    kind: str  # "number" | "text" | "bool" | "mixed"


@dataclass(frozen=True)
class Table:
    columns: tuple[Column, ...]
    rows: tuple[tuple[Value, ...], ...]

    @property
    def num_rows(self) -> int:
        return len(self.rows)

    @property
    def column_names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.columns)

    def column_index(self, field: str) -> int:
        for i, c in enumerate(self.columns):
            if c.name == field:
                return i
        available = ", ".join(c.name for c in self.columns)
        raise TableError(f"unknown column '{field}' (available: {available})")

    def column_kind(self, field: str) -> str:
        return self.columns[self.column_index(field)].kind


def _infer_kind(cells: Iterable[Value]) -> str:
    saw_number = saw_text = saw_bool = False
    for v in cells:
        if v is None:
            continue
        if isinstance(v, bool):
            saw_bool = True
        elif isinstance(v, float):
            saw_number = True
        else:
            saw_text = True
    flags = [saw_number, saw_text, saw_bool]
    if sum(flags) > 1:
        return "mixed"
    if saw_number:
        return "number"
    if saw_bool:
        return "bool"
    return "text"


def table_from_rows(names: Sequence[str], rows: Sequence[Sequence[Value]]) -> Table:
    """Build a Table, inferring per-column types from the cells."""
    seen: set[str] = set()
    for name in names:
        if not name:
            raise TableError("empty column name")
        if name in seen:
            raise TableError(f"duplicate column name '{name}'")
        seen.add(name)
    fixed_rows = []
    for i, row in enumerate(rows):
        if len(row) != len(names):
            raise TableError(
                f"row {i} has {len(row)} cells, expected {len(names)}"
            )
        fixed_rows.append(tuple(row))
    cols = tuple(
        Column(name, _infer_kind(r[i] for r in fixed_rows))
        for i, name in enumerate(names)
    )
    return Table(cols, tuple(fixed_rows))


def _with_rows(table: Table, rows: Sequence[tuple[Value, ...]]) -> Table:
    # Schema (names and inferred kinds) is preserved verbatim; used by
    # row-selection and the morphisms, which never change cell types.
    return Table(table.columns, tuple(rows))


def parse_cell(text: str) -> Value:
    """CSV cell -> Value: empty is Null, numeric literals are Number, else Text.

    Number literals accept optional sign, decimal point, and exponent only;
    no locale separators or underscores. Non-finite results become Null.
    """
    if text == "":
        return None
    if _NUMBER_RE.match(text):
        v = float(text)
        return v if math.isfinite(v) else None
    return text


def load_csv(text: str, delimiter: str = ",") -> Table:
    """Parse RFC-4180-style CSV with a required header row."""
    reader = csv.reader(io.StringIO(text), delimiter=delimiter)
    try:
        header = next(reader)
    except StopIteration:
        raise TableError("empty input: missing header row") from None
    rows = []
    for raw in reader:
        if not raw:
            continue  # blank trailing line
        if len(raw) != len(header):
            raise TableError(
                f"line {reader.line_num}: expected {len(header)} cells, got {len(raw)}"
            )
        rows.append([parse_cell(cell) for cell in raw])
    return table_from_rows(header, rows)


def load_json_rows(text: str) -> Table:
    """Parse a JSON array of flat objects; the key union defines the columns.

    Column order follows first appearance. Keys absent from a row are Null.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise TableError(f"invalid JSON: {exc}") from None
    if not isinstance(doc, list):
        raise TableError("JSON rows input must be a top-level array")
    names: list[str] = []
    for i, obj in enumerate(doc):
        if not isinstance(obj, dict):
            raise TableError(f"row {i} is not an object")
        for key in obj:
            if key not in names:
                names.append(key)
    rows = []
    for i, obj in enumerate(doc):
        row: list[Value] = []
        for name in names:
            v = obj.get(name)
            if v is None:
                row.append(None)
            elif isinstance(v, bool):
                row.append(v)
            elif isinstance(v, (int, float)):
                f = float(v)
                row.append(f if math.isfinite(f) else None)
            elif isinstance(v, str):
                row.append(v)
            else:
                raise TableError(f"row {i}, key '{name}': nested values not supported")
        rows.append(row)
    return table_from_rows(names, rows)


def format_number(v: float) -> str:
    if v == int(v) and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


def cell_to_csv(v: Value) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format_number(v)
    return v


def to_csv(table: Table) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(table.column_names)
    for row in table.rows:
        writer.writerow([cell_to_csv(v) for v in row])
    return buf.getvalue()


def select_rows(table: Table, indices: Sequence[int]) -> Table:
    """Select rows by index, in order; repeats yield repeated rows."""
    n = table.num_rows
    rows = []
    for i in indices:
        if not 0 <= i < n:
            raise TableError(f"row index {i} out of range (table has {n} rows)")
        rows.append(table.rows[i])
    return _with_rows(table, rows)


def column_values(table: Table, field: str) -> list[Value]:
    """Values of one column, in row order; Nulls preserved in place."""
    idx = table.column_index(field)
    return [row[idx] for row in table.rows]


def value_text(v: Value) -> str:
    """Canonical text form of a Value, used for category keys and sorting."""
    if v is None:
        return "⟨null⟩"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format_number(v)
    return v
