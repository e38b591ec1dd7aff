"""Result tables: CSV / JSON / aligned-text emission and read-back.

CSV layout: ``# key: <json>`` metadata lines, one header row, then data
rows. Floats are written with ``repr`` so reading a file back reproduces
every number bit for bit.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from dataclasses import dataclass, field
from typing import Any

FORMATS = ("csv", "json", "text")


@dataclass
class ResultTable:
    columns: list[str]
    rows: list[list[Any]] = field(default_factory=list)
    metadata: dict[str, Any] = field(default_factory=dict)

    def add_row(self, *cells):
        if len(cells) != len(self.columns):
            raise ValueError(f"row has {len(cells)} cells, table has {len(self.columns)} columns")
        self.rows.append(list(cells))

    def column(self, name: str) -> list:
        i = self.columns.index(name)
        return [r[i] for r in self.rows]

    def render(self, fmt: str) -> str:
        if fmt == "csv":
            return to_csv(self)
        if fmt == "json":
            return to_json(self)
        if fmt == "text":
            return to_text(self)
        raise ValueError(f"unknown format {fmt!r}")


def _cell(v) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _parse(s: str):
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        return s


def to_csv(table: ResultTable) -> str:
    buf = io.StringIO()
    for key in sorted(table.metadata):
        buf.write(f"# {key}: {json.dumps(table.metadata[key], sort_keys=True)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.columns)
    for row in table.rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def to_json(table: ResultTable) -> str:
    doc = {"metadata": table.metadata, "columns": table.columns, "rows": table.rows}
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def to_text(table: ResultTable) -> str:
    cells = [table.columns] + [[_cell(v) for v in r] for r in table.rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(table.columns))]
    lines = ["  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells]
    return "\n".join(lines) + "\n"


def from_csv(text: str) -> ResultTable:
    metadata = {}
    body = []
    for line in text.splitlines():
        if line.startswith("# "):
            key, _, value = line[2:].partition(": ")
            metadata[key] = json.loads(value)
        else:
            body.append(line)
    reader = csv.reader(body)
    columns = next(reader)
    rows = [[_parse(c) for c in r] for r in reader]
    return ResultTable(columns, rows, metadata)


def from_json(text: str) -> ResultTable:
    doc = json.loads(text)
    return ResultTable(doc["columns"], doc["rows"], doc["metadata"])


def read_table(path: str) -> ResultTable:
    with open(path) as f:
        text = f.read()
    return from_json(text) if path.endswith(".json") else from_csv(text)


def write_table(table: ResultTable, path: str, fmt: str) -> None:
    """Write atomically: the target only appears once fully written."""
    text = table.render(fmt)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
