"""CSV ingestion and export.

Dialect: comma separated, RFC 4180 quoting, mandatory header row, UTF-8.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from catsynth.core import NOMINAL, CategoricalSchema, DataTable, VariableSpec, read_json
from catsynth.errors import InputError


def _read_rows(path: str | Path) -> tuple[list[str], list[list[str]]]:
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            text = fh.read()
    except UnicodeDecodeError as exc:
        raise InputError(f"{path}: not valid UTF-8 ({exc})") from None
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror or exc}") from None
    reader = csv.reader(io.StringIO(text, newline=""))
    try:
        header = next(reader)
    except StopIteration:
        raise InputError(f"{path}: empty file, a header row is required") from None
    if len(set(header)) != len(header) or any(h == "" for h in header):
        raise InputError(f"{path}: header names must be unique and non-empty")
    rows = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise InputError(f"{path}, line {lineno}: expected {len(header)} fields, got {len(row)}")
        rows.append(row)
    return header, rows


def _first_appearance(values: Sequence[str]) -> tuple[str, ...]:
    return tuple(dict.fromkeys(values))


def load_schema(path: str | Path) -> dict:
    doc = read_json(path)
    if "variables" not in doc:
        raise InputError(f"{path}: schema document needs a 'variables' list")
    return doc


def ingest_csv(path: str | Path, schema: CategoricalSchema | Mapping | None = None) -> tuple[CategoricalSchema, DataTable]:
    """Read a CSV into a schema and an index table.

    Without ``schema`` every column becomes nominal with categories in
    first-appearance order. A schema (object or document) fixes the column
    order, kinds and category order; variables listed without categories have
    them inferred.
    """
    header, rows = _read_rows(path)
    for r, row in enumerate(rows, start=2):
        for c, cell in enumerate(row):
            if cell == "":
                raise InputError(f"{path}, line {r}, column {header[c]!r}: empty cell")
    columns = {h: [row[i] for row in rows] for i, h in enumerate(header)}

    if isinstance(schema, CategoricalSchema):
        schema = schema.to_dict()
    if schema is None:
        specs = [{"name": h} for h in header]
    else:
        specs = list(schema["variables"])
        names = [s["name"] for s in specs]
        if set(names) != set(header):
            raise InputError(
                f"{path}: columns {sorted(header)} do not match schema variables {sorted(names)}"
            )

    variables = []
    for spec in specs:
        name = spec["name"]
        cats = spec.get("categories")
        if cats is None:
            cats = _first_appearance(columns[name])
            if len(cats) < 2:
                raise InputError(f"{path}: column {name!r} has a single value; list its categories in a schema")
        variables.append(VariableSpec(name, tuple(cats), spec.get("kind", NOMINAL)))
    out_schema = CategoricalSchema(tuple(variables))

    values = np.empty((len(rows), len(variables)), dtype=np.int64)
    for j, var in enumerate(variables):
        lookup = {label: i for i, label in enumerate(var.categories)}
        for r, cell in enumerate(columns[var.name]):
            try:
                values[r, j] = lookup[cell]
            except KeyError:
                raise InputError(
                    f"{path}, line {r + 2}, column {var.name!r}: unknown category {cell!r} "
                    f"(valid: {list(var.categories)})"
                ) from None
    return out_schema, DataTable(out_schema, values)


def table_to_csv(table: DataTable) -> str:
    buf = io.StringIO(newline="")
    writer = csv.writer(buf)
    writer.writerow(table.schema.names)
    for v in table.schema.variables:
        if any("\x00" in label for label in (v.name, *v.categories)):
            raise InputError(f"variable {v.name!r}: NUL characters cannot be written to CSV")
    labels = [np.asarray(v.categories, dtype=object) for v in table.schema.variables]
    cols = [labels[j][table.values[:, j]] for j in range(len(labels))]
    writer.writerows(zip(*cols))
    return buf.getvalue()


def export_csv(table: DataTable, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(table_to_csv(table))
    return path


def write_histograms(histograms: Mapping[str, Sequence[tuple[str, float, float]]], out_dir: str | Path) -> list[Path]:
    """One CSV per column with ``category,real_freq,synth_freq`` rows."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for column, rows in histograms.items():
        path = out_dir / f"{column}.csv"
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["category", "real_freq", "synth_freq"])
            writer.writerows((label, repr(real), repr(synth)) for label, real, synth in rows)
        paths.append(path)
    return paths
