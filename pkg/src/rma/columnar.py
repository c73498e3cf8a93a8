"""Column storage: typed columns, schemas, relations and sort/align primitives.

Every attribute of a relation lives in its own immutable numpy array.  The
row position inside that array plays the role of the object identifier, so
reordering a relation is a gather of each column by a permutation (the
analog of a ``leftfetchjoin``).
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DuplicateAttributeError,
    KindError,
    LengthMismatchError,
    SchemaError,
    UnknownAttributeError,
)


class Kind(str, enum.Enum):
    FLOAT64 = "float64"
    INT64 = "int64"
    TEXT = "text"

    @property
    def is_numeric(self) -> bool:
        return self is not Kind.TEXT

    @property
    def dtype(self):
        return {Kind.FLOAT64: np.float64, Kind.INT64: np.int64, Kind.TEXT: object}[self]


@dataclass(frozen=True)
class Attribute:
    name: str
    kind: Kind


class Schema:
    """Ordered list of uniquely named, typed attributes."""

    __slots__ = ("attrs", "_index")

    def __init__(self, attrs: Iterable[Attribute | tuple[str, Kind | str]]):
        items = []
        for a in attrs:
            if not isinstance(a, Attribute):
                name, kind = a
                a = Attribute(name, Kind(kind))
            if not isinstance(a.name, str) or not a.name:
                raise SchemaError(f"attribute names must be non-empty text, got {a.name!r}")
            items.append(a)
        index = {}
        for i, a in enumerate(items):
            if a.name in index:
                raise DuplicateAttributeError(f"duplicate attribute name {a.name!r}")
            index[a.name] = i
        self.attrs = tuple(items)
        self._index = index

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.attrs)

    @property
    def kinds(self) -> tuple[Kind, ...]:
        return tuple(a.kind for a in self.attrs)

    def __len__(self):
        return len(self.attrs)

    def __iter__(self):
        return iter(self.attrs)

    def __contains__(self, name):
        return name in self._index

    def __eq__(self, other):
        return isinstance(other, Schema) and self.attrs == other.attrs

    def __hash__(self):
        return hash(self.attrs)

    def __repr__(self):
        inner = ", ".join(f"{a.name}:{a.kind.value}" for a in self.attrs)
        return f"Schema({inner})"

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise UnknownAttributeError(name, self.names) from None

    def kind(self, name: str) -> Kind:
        return self.attrs[self.index(name)].kind

    def __add__(self, other: "Schema") -> "Schema":
        return Schema(self.attrs + other.attrs)


class Column:
    """Immutable typed value sequence; position is the implicit row id."""

    __slots__ = ("kind", "values")

    def __init__(self, kind: Kind | str, values):
        kind = Kind(kind)
        arr = _coerce(kind, values)
        arr.setflags(write=False)
        self.kind = kind
        self.values = arr

    @classmethod
    def infer(cls, values: Sequence) -> "Column":
        return cls(infer_kind(values), values)

    def __len__(self):
        return len(self.values)

    def __getitem__(self, i):
        return self.values[i]

    def tolist(self) -> list:
        return self.values.tolist()

    def as_float(self) -> np.ndarray:
        if not self.kind.is_numeric:
            raise KindError("text column cannot be widened to float64")
        return self.values.astype(np.float64)

    def __repr__(self):
        return f"Column({self.kind.value}, {self.tolist()!r})"


def infer_kind(values: Sequence) -> Kind:
    vals = list(values)
    if vals and all(isinstance(v, (int, np.integer)) and not isinstance(v, bool) for v in vals):
        return Kind.INT64
    if vals and all(isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool) for v in vals):
        return Kind.FLOAT64
    if all(isinstance(v, str) for v in vals):
        return Kind.TEXT if vals else Kind.FLOAT64
    raise KindError(f"cannot infer a single column kind from {vals[:5]!r}")


def _coerce(kind: Kind, values) -> np.ndarray:
    if kind is Kind.TEXT:
        arr = np.empty(len(values), dtype=object)
        for i, v in enumerate(values):
            if not isinstance(v, str):
                raise KindError(f"text column holds non-text value {v!r}")
            arr[i] = v
        return arr
    src = np.asarray(values)
    if src.dtype == object or src.dtype.kind in "USb":
        if any(isinstance(v, (str, bool, np.bool_)) or v is None for v in src.tolist()):
            raise KindError(f"{kind.value} column holds a non-numeric value")
    if kind is Kind.INT64:
        if src.size and src.dtype.kind == "f":
            if not np.all(np.isfinite(src)) or not np.all(src == np.round(src)):
                raise KindError("int64 column holds a non-integral value")
        return np.array(src, dtype=np.int64).reshape(-1)
    arr = np.array(src, dtype=np.float64).reshape(-1)
    if not np.all(np.isfinite(arr)):
        raise KindError("float64 column holds a missing or non-finite value")
    return arr


class Relation:
    """A bag of tuples stored column-wise."""

    __slots__ = ("name", "schema", "columns", "_nrows")

    def __init__(self, schema: Schema, columns: Sequence[Column], name: str | None = None):
        columns = tuple(columns)
        if len(columns) != len(schema):
            raise SchemaError(f"{len(schema)} attributes but {len(columns)} columns")
        lengths = {len(c) for c in columns}
        if len(lengths) > 1:
            raise LengthMismatchError(f"columns of unequal length: {sorted(lengths)}")
        for attr, col in zip(schema, columns):
            if attr.kind is not col.kind:
                raise KindError(f"attribute {attr.name!r} declared {attr.kind.value}, column is {col.kind.value}")
        self.schema = schema
        self.columns = columns
        self.name = name
        # zero-column relations still need a row count
        self._nrows = lengths.pop() if lengths else 0

    @classmethod
    def from_columns(cls, data: dict, name: str | None = None, kinds: dict | None = None) -> "Relation":
        kinds = kinds or {}
        cols, attrs = [], []
        for attr_name, values in data.items():
            col = values if isinstance(values, Column) else (
                Column(kinds[attr_name], values) if attr_name in kinds else Column.infer(values))
            cols.append(col)
            attrs.append(Attribute(attr_name, col.kind))
        return cls(Schema(attrs), cols, name)

    @classmethod
    def from_rows(cls, names: Sequence[str], rows: Iterable[Sequence], name: str | None = None,
                  kinds: Sequence[Kind | str] | None = None) -> "Relation":
        rows = [tuple(r) for r in rows]
        for r in rows:
            if len(r) != len(names):
                raise LengthMismatchError(f"row {r!r} has {len(r)} values, schema has {len(names)}")
        columns = [[r[i] for r in rows] for i in range(len(names))]
        if kinds is None:
            kinds = [infer_kind(c) for c in columns]
        cols = [Column(k, c) for k, c in zip(kinds, columns)]
        return cls(Schema(Attribute(n, c.kind) for n, c in zip(names, cols)), cols, name)

    @classmethod
    def empty_rows(cls, nrows: int, name: str | None = None) -> "Relation":
        rel = cls(Schema(()), (), name)
        rel._nrows = nrows
        return rel

    def __len__(self):
        return self._nrows

    @property
    def names(self) -> tuple[str, ...]:
        return self.schema.names

    def column(self, name: str) -> Column:
        return self.columns[self.schema.index(name)]

    def rows(self) -> list[tuple]:
        if not self.columns:
            return [() for _ in range(self._nrows)]
        return list(zip(*(c.tolist() for c in self.columns)))

    def row_multiset(self) -> dict:
        counts: dict = {}
        for r in self.rows():
            counts[r] = counts.get(r, 0) + 1
        return counts

    def same_bag(self, other: "Relation") -> bool:
        return self.schema.names == other.schema.names and self.row_multiset() == other.row_multiset()

    def with_name(self, name: str | None) -> "Relation":
        rel = Relation(self.schema, self.columns, name)
        rel._nrows = self._nrows
        return rel

    def __repr__(self):
        label = self.name or "relation"
        return f"<{label} {self.schema!r} rows={len(self)}>"


@dataclass(frozen=True)
class SortPermutation:
    indices: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64).reshape(-1)
        if not np.array_equal(np.sort(idx), np.arange(len(idx))):
            raise ValueError("indices are not a permutation of 0..N-1")
        idx.setflags(write=False)
        object.__setattr__(self, "indices", idx)

    def __len__(self):
        return len(self.indices)

    def is_identity(self) -> bool:
        return bool(np.array_equal(self.indices, np.arange(len(self.indices))))

    def inverse(self) -> "SortPermutation":
        inv = np.empty_like(self.indices)
        inv[self.indices] = np.arange(len(self.indices))
        return SortPermutation(inv)


class SortStats:
    """Counts sort and gather operations; used to verify sort avoidance."""

    def __init__(self):
        self.sorts = 0
        self.gathers = 0

    def reset(self):
        self.sorts = 0
        self.gathers = 0


SORT_STATS = SortStats()


def sort_key(col: Column) -> np.ndarray:
    if col.kind is Kind.TEXT:
        # str comparison is by code point, which matches UTF-8 byte order
        _, codes = np.unique(col.values, return_inverse=True)
        return codes.reshape(-1)
    return col.values


def sort_permutation(r: Relation, order_attrs: Sequence[str]) -> SortPermutation:
    """Stable ascending lexicographic sort of ``r`` by ``order_attrs``."""
    cols = [r.column(a) for a in order_attrs]
    SORT_STATS.sorts += 1
    n = len(r)
    if not cols or n == 0:
        return SortPermutation(np.arange(n))
    keys = [sort_key(c) for c in reversed(cols)]
    return SortPermutation(np.lexsort(keys))


def apply_permutation(c: Column, p: SortPermutation) -> Column:
    if len(c) != len(p):
        raise LengthMismatchError(f"column has {len(c)} values, permutation has {len(p)}")
    SORT_STATS.gathers += 1
    return Column(c.kind, c.values[p.indices])


def permute(r: Relation, p: SortPermutation) -> Relation:
    if len(r) != len(p):
        raise LengthMismatchError(f"relation has {len(r)} rows, permutation has {len(p)}")
    out = Relation(r.schema, [apply_permutation(c, p) for c in r.columns], r.name)
    out._nrows = len(p)
    return out


def take_rows(r: Relation, indices: np.ndarray) -> Relation:
    """Positional gather that may repeat or drop rows (selection, joins)."""
    idx = np.asarray(indices, dtype=np.int64)
    out = Relation(r.schema, [Column(c.kind, c.values[idx]) for c in r.columns], r.name)
    out._nrows = len(idx)
    return out


def project_columns(r: Relation, names: Sequence[str]) -> Relation:
    names = list(names)
    if len(set(names)) != len(names):
        raise DuplicateAttributeError(f"duplicate names in projection {names!r}")
    idx = [r.schema.index(n) for n in names]
    out = Relation(Schema(r.schema.attrs[i] for i in idx), [r.columns[i] for i in idx], r.name)
    out._nrows = len(r)
    return out


def concat_columns(parts: Sequence[Relation], name: str | None = None) -> Relation:
    """Positional (side by side) concatenation of equal-height relations."""
    if not parts:
        raise SchemaError("nothing to concatenate")
    heights = {len(p) for p in parts}
    if len(heights) != 1:
        raise LengthMismatchError(f"cannot concatenate relations of heights {sorted(heights)}")
    attrs = tuple(a for p in parts for a in p.schema)
    cols = [c for p in parts for c in p.columns]
    out = Relation(Schema(attrs), cols, name)
    out._nrows = heights.pop()
    return out


# -- value rendering --------------------------------------------------------


def render_value(value, kind: Kind) -> str:
    """Canonical text of a value: ints without a decimal point, floats as
    the shortest round-trip decimal, text verbatim."""
    if kind is Kind.TEXT:
        return value
    if kind is Kind.INT64:
        return str(int(value))
    return repr(float(value))


_INT_RE = re.compile(r"[+-]?\d+\Z")
_FLOAT_RE = re.compile(r"[+-]?(\d+\.?\d*([eE][+-]?\d+)?|\.\d+([eE][+-]?\d+)?)\Z")
_INT64_MIN, _INT64_MAX = -(2**63), 2**63 - 1


def parse_int(text: str):
    if _INT_RE.match(text):
        v = int(text)
        if _INT64_MIN <= v <= _INT64_MAX:
            return v
    return None


def parse_float(text: str):
    if _FLOAT_RE.match(text):
        v = float(text)
        if math.isfinite(v):
            return v
    return None
