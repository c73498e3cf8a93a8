"""Table catalog: CSV ingestion and export, and on-disk persistence.

A persisted table lives in its own directory under ``<root>/tables``::

    schema.txt     "rows <n>" followed by one "<kind> <name>" line per attribute
    col<i>.bin     raw little-endian column values

Numeric columns are stored as ``<f8`` / ``<i8`` arrays.  Text columns are a
sequence of records, each a ``<u4`` byte length followed by UTF-8 bytes.
"""

from __future__ import annotations

import csv
import os
import shutil
import struct
import tempfile
from pathlib import Path

import numpy as np

from .columnar import Attribute, Column, Kind, Relation, Schema, parse_float, parse_int, render_value
from .errors import CatalogError, IngestError, RmaError

_DTYPES = {Kind.FLOAT64: "<f8", Kind.INT64: "<i8"}


# -- CSV -------------------------------------------------------------------------------


def infer_column(name: str, cells: list[str]) -> Column:
    """int64 if every cell is an integer, else float64 if every cell is a
    number, else text."""
    ints = [parse_int(c) for c in cells]
    if all(v is not None for v in ints):
        return Column(Kind.INT64, ints)
    floats = [parse_float(c) for c in cells]
    if all(v is not None for v in floats):
        return Column(Kind.FLOAT64, floats)
    return Column(Kind.TEXT, cells)


def read_csv(path: str | Path, name: str | None = None) -> Relation:
    path = Path(path)
    try:
        with open(path, newline="", encoding="utf-8") as f:
            rows = list(csv.reader(f, strict=True))
    except FileNotFoundError:
        raise IngestError(f"file not found: {path}") from None
    except (csv.Error, UnicodeDecodeError) as e:
        raise IngestError(f"{path}: malformed CSV: {e}") from None
    if not rows:
        raise IngestError(f"{path}: missing header row")
    header, body = rows[0], rows[1:]
    if not header or any(h == "" for h in header):
        raise IngestError(f"{path}: header contains an empty attribute name")
    seen = set()
    for h in header:
        if h in seen:
            raise IngestError(f"{path}: duplicate header name {h!r}")
        seen.add(h)
    for lineno, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise IngestError(f"{path}: row {lineno} has {len(row)} cells, header has {len(header)}")
        for h, cell in zip(header, row):
            if cell == "":
                raise IngestError(f"{path}: row {lineno}: empty cell for attribute {h!r}")
    cols = [infer_column(h, [row[j] for row in body]) for j, h in enumerate(header)]
    schema = Schema(Attribute(h, c.kind) for h, c in zip(header, cols))
    if not body:
        schema = Schema(Attribute(h, Kind.TEXT) for h in header)
        cols = [Column(Kind.TEXT, []) for _ in header]
    return Relation(schema, cols, name)


def write_csv(r: Relation, path: str | Path):
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(r.names)
        kinds = r.schema.kinds
        for row in r.rows():
            w.writerow([render_value(v, k) for v, k in zip(row, kinds)])


# -- binary column files -------------------------------------------------------------


def _write_column(col: Column, path: Path):
    if col.kind is Kind.TEXT:
        with open(path, "wb") as f:
            for v in col.values.tolist():
                data = v.encode("utf-8")
                f.write(struct.pack("<I", len(data)))
                f.write(data)
    else:
        np.asarray(col.values, dtype=_DTYPES[col.kind]).tofile(path)


def _read_column(kind: Kind, path: Path, nrows: int) -> Column:
    if kind is Kind.TEXT:
        raw = path.read_bytes()
        values, off = [], 0
        while off < len(raw):
            (n,) = struct.unpack_from("<I", raw, off)
            off += 4
            values.append(raw[off:off + n].decode("utf-8"))
            off += n
        if off != len(raw):
            raise CatalogError(f"{path}: truncated text record")
    else:
        values = np.fromfile(path, dtype=_DTYPES[kind])
    if len(values) != nrows:
        raise CatalogError(f"{path}: {len(values)} values, schema says {nrows} rows")
    return Column(kind, values)


def save_table(r: Relation, directory: Path):
    """Write ``r`` into ``directory``, replacing it atomically."""
    directory = Path(directory)
    directory.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=".tmp-", dir=directory.parent))
    try:
        lines = [f"rows {len(r)}"] + [f"{a.kind.value} {a.name}" for a in r.schema]
        (tmp / "schema.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
        for i, col in enumerate(r.columns):
            _write_column(col, tmp / f"col{i}.bin")
        if directory.exists():
            shutil.rmtree(directory)
        os.replace(tmp, directory)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise


def load_table(directory: Path, name: str | None = None) -> Relation:
    directory = Path(directory)
    lines = (directory / "schema.txt").read_text(encoding="utf-8").splitlines()
    if not lines or not lines[0].startswith("rows "):
        raise CatalogError(f"{directory}: schema descriptor lacks a row count")
    nrows = int(lines[0][5:])
    attrs = []
    for line in lines[1:]:
        kind, _, attr = line.partition(" ")
        try:
            attrs.append(Attribute(attr, Kind(kind)))
        except ValueError:
            raise CatalogError(f"{directory}: unknown column kind {kind!r}") from None
    cols = [_read_column(a.kind, directory / f"col{i}.bin", nrows) for i, a in enumerate(attrs)]
    rel = Relation(Schema(attrs), cols, name)
    rel._nrows = nrows
    return rel


# -- the catalog -----------------------------------------------------------------------


class Catalog:
    """Named relations, optionally persisted below ``root``."""

    def __init__(self, root: str | Path | None = None):
        self.root = Path(root) if root is not None else None
        self._tables: dict[str, Relation] = {}
        if self.root is not None:
            self._load_all()

    def _table_dir(self, name: str) -> Path:
        return self.root / "tables" / name

    def _load_all(self):
        tables = self.root / "tables"
        if not tables.is_dir():
            return
        for d in sorted(tables.iterdir()):
            if d.is_dir() and not d.name.startswith("."):
                try:
                    self._tables[d.name] = load_table(d, d.name)
                except (OSError, ValueError, RmaError) as e:
                    raise CatalogError(f"cannot load table {d.name}: {e}") from e

    @staticmethod
    def check_name(name: str):
        if not name or name.startswith(".") or "/" in name or "\\" in name or "\0" in name:
            raise CatalogError(f"invalid table name {name!r}")

    def names(self) -> list[str]:
        return sorted(self._tables)

    def __contains__(self, name):
        return name in self._tables

    def get(self, name: str) -> Relation:
        return self._tables[name]

    def register(self, name: str, r: Relation):
        self.check_name(name)
        r = r.with_name(name)
        if self.root is not None:
            save_table(r, self._table_dir(name))
        self._tables[name] = r
        return r

    def load_csv(self, name: str, path: str | Path) -> Relation:
        self.check_name(name)
        return self.register(name, read_csv(path, name))

    def export_csv(self, name: str, path: str | Path):
        write_csv(self.get(name), path)
