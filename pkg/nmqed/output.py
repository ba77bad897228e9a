from __future__ import annotations
import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterator, Sequence
import numpy as np
from .errors import OutputError
from .utils import format_number


__all__ = [
    "FORMATS",
    "Table",
    "table_filename",
    "write_table",
    "write_manifest",
    "ensure_directory",
]

FORMATS = {"csv": "csv", "ndjson": "ndjson"}


@dataclass(frozen=True)
class Table:
    """
    A named table stored column by column. Missing values are ``None``
    or ``NaN`` and are written as empty CSV cells or JSON ``null``.
    """
    name: str
    columns: tuple[str, ...]
    data: tuple[Sequence[Any], ...]

    def __post_init__(self):
        if len(self.columns) != len(self.data):
            raise ValueError(
                f"Table '{self.name}' has {len(self.columns)} columns and "
                f"{len(self.data)} data series."
            )
        lengths = {len(series) for series in self.data}
        if len(lengths) > 1:
            raise ValueError(
                f"Columns of table '{self.name}' differ in length: "
                f"{sorted(lengths)}."
            )

    def __len__(self) -> int:
        return len(self.data[0]) if self.data else 0

    def rows(self) -> Iterator[tuple[Any, ...]]:
        """Iterate over the rows of the table."""
        series = [
            s.tolist() if isinstance(s, np.ndarray) else s
            for s in self.data
        ]
        return zip(*series)


def _is_missing(value: Any) -> bool:
    return value is None or (isinstance(value, float) and math.isnan(value))


def _cell(value: Any) -> str:
    return "" if _is_missing(value) else format_number(value)


def _json_value(value: Any) -> str:
    if _is_missing(value):
        return "null"
    if isinstance(value, str):
        return json.dumps(value)
    return format_number(value)


def table_filename(label: str, table: str, fmt: str) -> str:
    """Name of the file holding ``table`` of the run ``label``."""
    if fmt not in FORMATS:
        raise ValueError(f"Unknown format '{fmt}'.")
    prefix = f"{label}_" if label else ""
    return f"{prefix}{table}.{FORMATS[fmt]}"


def ensure_directory(directory: Path) -> Path:
    """
    Create ``directory`` if needed.

    :raises OutputError: If it cannot be created.
    """
    try:
        directory.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OutputError(
            f"Cannot create the output directory '{directory}': {exc}"
        ) from exc
    return directory


def write_table(
    table: Table,
    directory: Path,
    label: str,
    fmt: str = "csv"
) -> Path:
    """
    Write a table as CSV (header plus one line per row) or as newline
    delimited JSON (one object per row). Numbers carry 17 significant
    digits.

    :param table: The table to write.
    :param directory: Destination directory.
    :param label: Label of the run the table belongs to.
    :param fmt: ``csv`` or ``ndjson``.
    :return: The path of the written file.
    :raises OutputError: If the file cannot be written.
    """
    path = directory / table_filename(label, table.name, fmt)
    try:
        with open(path, "w", encoding="utf-8", newline="") as f:
            if fmt == "csv":
                writer = csv.writer(f, lineterminator="\n")
                writer.writerow(table.columns)
                for row in table.rows():
                    writer.writerow([_cell(v) for v in row])
            else:
                keys = [json.dumps(c) for c in table.columns]
                for row in table.rows():
                    fields = ", ".join(
                        f"{k}: {_json_value(v)}" for k, v in zip(keys, row)
                    )
                    f.write(f"{{{fields}}}\n")
    except OSError as exc:
        raise OutputError(f"Cannot write '{path}': {exc}") from exc
    return path


def write_manifest(directory: Path, manifest: dict[str, Any]) -> Path:
    """
    Write the run record ``manifest.json``.

    :raises OutputError: If the file cannot be written.
    """
    path = directory / "manifest.json"
    try:
        path.write_text(
            json.dumps(manifest, indent=2) + "\n", encoding="utf-8"
        )
    except OSError as exc:
        raise OutputError(f"Cannot write '{path}': {exc}") from exc
    return path
