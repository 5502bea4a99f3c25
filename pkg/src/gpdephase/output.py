"""Table serialization, output manifests and plot-script generation.

CSV layout::

    # gpdephase {"axes": [...], "columns": [...], ...}
    t,s,D
    0.014999999999999999,0.025000000000000001,0.0080...

The first line carries the full metadata as one JSON object so no data
file is separated from its parameters. Numbers use 17 significant digits,
which round-trips binary64 exactly; flagged points are written ``nan``.

JSON layout: ``{"axes", "columns", "values", "metadata"}`` where
``values`` lists one row of column values per grid point in row-major
order and flagged points are ``null``.
"""

import hashlib
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import OutputError
from .sweep import Axis, SweepTable

__all__ = [
    "OutputManifest",
    "write_table",
    "read_table",
    "emit_plot_script",
    "sha256_of",
]

CSV_MARKER = "# gpdephase "


def _fmt(x):
    x = float(x)
    if math.isnan(x):
        return "nan"
    return format(x, ".17g")


def _axes_from(meta_axes):
    out = []
    for a in meta_axes:
        if "points" in a:
            out.append(Axis(a["name"], a["start"], a["stop"], a["count"], tuple(a["points"])))
        else:
            out.append(Axis(a["name"], a["start"], a["stop"], a["count"]))
    return tuple(out)


def _header(table):
    meta = dict(table.metadata)
    meta["axes"] = [a.describe() for a in table.axes]
    meta["columns"] = list(table.columns)
    return meta


def sha256_of(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class OutputManifest:
    """Files written by one command, with checksums and a parameter echo."""

    files: list = field(default_factory=list)
    wall_time: float = 0.0
    parameters: dict = field(default_factory=dict)
    report: dict = field(default_factory=dict)

    def add(self, path, role):
        path = Path(path)
        entry = {
            "path": str(path),
            "role": role,
            "bytes": path.stat().st_size,
            "sha256": sha256_of(path),
        }
        self.files.append(entry)
        return entry

    def verify(self):
        """True iff every listed file exists with its recorded checksum."""
        if not self.files:
            return False
        for entry in self.files:
            p = Path(entry["path"])
            if not p.is_file() or sha256_of(p) != entry["sha256"]:
                return False
        return True

    def to_dict(self):
        return {
            "files": self.files,
            "wall_time": self.wall_time,
            "parameters": self.parameters,
            "report": self.report,
            "verified": self.verify(),
        }


def write_table(table, fmt, path):
    """Write ``table`` as CSV or JSON; returns the output path."""
    path = Path(path)
    meta = _header(table)
    try:
        if path.parent and not path.parent.exists():
            path.parent.mkdir(parents=True, exist_ok=True)
        if fmt == "csv":
            lines = [CSV_MARKER + json.dumps(meta, sort_keys=True, allow_nan=False)]
            lines.append(",".join([a.name for a in table.axes] + list(table.columns)))
            for coords, vals in table.rows():
                lines.append(",".join([_fmt(c) for c in coords] + [_fmt(v) for v in vals]))
            text = "\n".join(lines) + "\n"
        elif fmt == "json":
            rows = [[None if math.isnan(v) else float(v) for v in vals] for _, vals in table.rows()]
            doc = {"axes": meta["axes"], "columns": meta["columns"], "values": rows, "metadata": meta}
            text = json.dumps(doc, sort_keys=True, indent=1, allow_nan=False) + "\n"
        else:
            raise OutputError(f"unknown table format {fmt!r}")
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        if isinstance(exc, OutputError):
            raise
        raise OutputError(f"cannot write {path}: {exc}") from exc
    return path


def read_table(path):
    """Read a table written by write_table (format chosen by content)."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise OutputError(f"cannot read {path}: {exc}") from exc
    if text.startswith(CSV_MARKER):
        lines = text.splitlines()
        meta = json.loads(lines[0][len(CSV_MARKER):])
        axes = _axes_from(meta["axes"])
        na = len(axes)
        rows = [ln.split(",") for ln in lines[2:] if ln]
        values = np.array([[float(x) for x in r[na:]] for r in rows], dtype=float)
        columns = tuple(meta["columns"])
    else:
        doc = json.loads(text)
        meta = doc["metadata"]
        axes = _axes_from(doc["axes"])
        columns = tuple(doc["columns"])
        values = np.array(
            [[math.nan if v is None else v for v in row] for row in doc["values"]], dtype=float
        )
    meta = {k: v for k, v in meta.items() if k not in ("axes", "columns")}
    return SweepTable(axes, columns, values, meta)


# ---------------------------------------------------------------------------
# gnuplot scripts
# ---------------------------------------------------------------------------

_DENSITY = """\
# gnuplot script for {table}
set datafile separator ","
set key autotitle columnheader
set terminal pngcairo size 900,700 noenhanced
set output "{png}"
set xlabel "{xlabel}"
set ylabel "{ylabel}"
set cblabel "{zlabel}"
set palette defined (-1 "black", 0 "white", 1 "orange")
set cbrange [-{zmax}:{zmax}]
unset key
plot "{table}" using 1:2:{zcol} with image
"""

_CURVES_HEAD = """\
# gnuplot script for {table}
set datafile separator ","
set terminal pngcairo size 900,700 noenhanced
set output "{png}"
set key autotitle columnheader
set xlabel "{xlabel}"
set ylabel "{ylabel}"
set key outside right
"""


def emit_plot_script(table_path, style, script_path=None, column=None):
    """Write a gnuplot script that renders a CSV table; returns its path.

    ``style`` is ``density`` (image of the column over the two axes) or
    ``curves`` (one line per value of the second axis, x = first axis).
    The script is only written, never run.
    """
    table_path = Path(table_path)
    if not table_path.is_file():
        raise OutputError(f"table {table_path} does not exist")
    with open(table_path, encoding="utf-8") as fh:
        if not fh.readline().startswith(CSV_MARKER):
            raise OutputError("plot scripts need a CSV table")
    table = read_table(table_path)
    column = column or table.columns[0]
    if column not in table.columns:
        raise OutputError(f"table has no column {column!r}")
    na = len(table.axes)
    zcol = na + table.columns.index(column) + 1
    script_path = Path(script_path) if script_path else table_path.with_suffix(".gp")
    png = table_path.with_suffix(".png").name
    name = table_path.name
    if style == "density":
        if na != 2:
            raise OutputError("density plots need a two-axis table")
        vals = table.column(column)
        finite = vals[np.isfinite(vals)]
        zmax = float(np.max(np.abs(finite))) if finite.size else 1.0
        text = _DENSITY.format(
            table=name,
            png=png,
            xlabel=table.axes[0].name,
            ylabel=table.axes[1].name,
            zlabel=column,
            zmax=_fmt(zmax or 1.0),
            zcol=zcol,
        )
    elif style == "curves":
        text = _CURVES_HEAD.format(table=name, png=png, xlabel=table.axes[0].name, ylabel=column)
        if na == 1:
            text += f'plot "{name}" using 1:{zcol} with linespoints title "{column}"\n'
        else:
            series = table.axes[1]
            parts = []
            for v in series.values():
                lit = _fmt(v)
                parts.append(
                    f'"{name}" using 1:(abs($2 - ({lit})) < 1e-12 ? ${zcol} : NaN) '
                    f'with linespoints title "{series.name} = {float(v):g}"'
                )
            text += "plot " + ", \\\n     ".join(parts) + "\n"
    else:
        raise OutputError(f"unknown plot style {style!r}")
    try:
        with open(script_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise OutputError(f"cannot write {script_path}: {exc}") from exc
    return script_path
