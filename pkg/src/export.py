"""CSV / JSON emission for computed tables.

CSV: comma separated, one '#' header line with the model label and parameters,
then a column-name row, numbers in scientific notation with 17 significant digits.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence


@dataclass
class Table:
    """Named columns of equal length plus header metadata."""
    name: str
    columns: dict[str, Sequence[Any]]
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        lengths = {len(v) for v in self.columns.values()}
        if len(lengths) > 1:
            raise ValueError(f"table {self.name}: columns have different lengths {sorted(lengths)}")

    @property
    def n_rows(self) -> int:
        return len(next(iter(self.columns.values()), ()))

    def rows(self) -> list[list[Any]]:
        return [list(row) for row in zip(*self.columns.values())]


def format_number(value: Any) -> str:
    """Lossless text for doubles; strings pass through."""
    if isinstance(value, str):
        return value
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, int):
        return str(value)
    return f"{float(value):.16e}"


def _header(meta: dict[str, Any]) -> str:
    parts = []
    for key, value in meta.items():
        if isinstance(value, dict):
            parts.extend(f"{k}={format_number(v)}" for k, v in value.items())
        else:
            parts.append(f"{key}={value}")
    return "# " + " ".join(parts)


def write_csv(table: Table, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        f.write(_header(table.meta) + "\n")
        w = csv.writer(f, lineterminator="\n")
        w.writerow(list(table.columns))
        for row in table.rows():
            w.writerow([format_number(v) for v in row])
    return path


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if hasattr(value, "tolist"):
        return _jsonable(value.tolist())
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def to_json_text(payload: Any) -> str:
    """Sorted keys; NaN and inf become null."""
    return json.dumps(_jsonable(payload), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(table: Table, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {"meta": table.meta, "columns": list(table.columns), "rows": table.rows()}
    path.write_text(to_json_text(payload), encoding="utf-8")
    return path


def write_table(table: Table, directory: Path, prefix: str, fmt: str = "csv") -> Path:
    """Write `{prefix}_{table.name}.{fmt}` under directory."""
    path = Path(directory) / f"{prefix}_{table.name}.{fmt}"
    if fmt == "json":
        return write_json(table, path)
    return write_csv(table, path)


def read_csv(path: Path) -> tuple[str, list[str], list[list[str]]]:
    """(header line, column names, raw rows)."""
    with open(path, newline="", encoding="utf-8") as f:
        header = f.readline().rstrip("\n")
        reader = csv.reader(f)
        columns = next(reader)
        return header, columns, [row for row in reader]
