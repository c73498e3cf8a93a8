"""Classical relational operators over column-stored relations.

All operators have bag semantics and never mutate their inputs.  Scalar
expressions are small immutable trees evaluated a whole column at a time.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .columnar import (
    Attribute,
    Column,
    Kind,
    Relation,
    Schema,
    concat_columns,
    sort_key,
    take_rows,
)
from .errors import (
    DuplicateAttributeError,
    EvaluationError,
    KindError,
    SchemaError,
    UnknownAttributeError,
)

BOOL = "bool"

ARITHMETIC = ("+", "-", "*", "/")
COMPARISON = ("=", "<>", "<", ">", "<=", ">=")
LOGICAL = ("AND", "OR")


class Expr:
    """Base class of scalar expressions."""

    def kind_in(self, schema: Schema):
        raise NotImplementedError

    def evaluate(self, r: Relation) -> np.ndarray:
        raise NotImplementedError

    def columns(self) -> set[str]:
        return set()


@dataclass(frozen=True)
class ColumnRef(Expr):
    name: str

    def kind_in(self, schema):
        return schema.kind(self.name)

    def evaluate(self, r):
        return r.column(self.name).values

    def columns(self):
        return {self.name}


@dataclass(frozen=True)
class Literal(Expr):
    value: object

    @property
    def kind(self):
        v = self.value
        if isinstance(v, bool):
            return BOOL
        if isinstance(v, int):
            return Kind.INT64
        if isinstance(v, float):
            return Kind.FLOAT64
        if isinstance(v, str):
            return Kind.TEXT
        raise KindError(f"unsupported literal {v!r}")

    def kind_in(self, schema):
        return self.kind

    def evaluate(self, r):
        k = self.kind
        dtype = bool if k == BOOL else k.dtype
        out = np.empty(len(r), dtype=dtype)
        out[:] = self.value
        return out


@dataclass(frozen=True)
class BinaryOp(Expr):
    op: str
    left: Expr
    right: Expr

    def kind_in(self, schema):
        lk, rk = self.left.kind_in(schema), self.right.kind_in(schema)
        if self.op in ARITHMETIC:
            if lk == BOOL or rk == BOOL or not lk.is_numeric or not rk.is_numeric:
                raise KindError(f"operator {self.op} needs numeric operands")
            if self.op == "/" or Kind.FLOAT64 in (lk, rk):
                return Kind.FLOAT64
            return Kind.INT64
        if self.op in COMPARISON:
            if lk == BOOL or rk == BOOL:
                if lk != rk:
                    raise KindError(f"cannot compare {lk} with {rk}")
            elif lk.is_numeric != rk.is_numeric:
                raise KindError(f"cannot compare {lk.value} with {rk.value}")
            return BOOL
        if self.op in LOGICAL:
            if lk != BOOL or rk != BOOL:
                raise KindError(f"{self.op} needs boolean operands")
            return BOOL
        raise KindError(f"unknown operator {self.op}")

    def evaluate(self, r):
        kind = self.kind_in(r.schema)
        a, b = self.left.evaluate(r), self.right.evaluate(r)
        op = self.op
        if op in ARITHMETIC:
            if kind is Kind.FLOAT64:
                a, b = a.astype(np.float64), b.astype(np.float64)
            if op == "/":
                if np.any(b == 0):
                    raise EvaluationError("division by zero")
                return a / b
            return {"+": np.add, "-": np.subtract, "*": np.multiply}[op](a, b)
        if op in COMPARISON:
            fn = {"=": np.equal, "<>": np.not_equal, "<": np.less, ">": np.greater,
                  "<=": np.less_equal, ">=": np.greater_equal}[op]
            return np.asarray(fn(a, b), dtype=bool)
        if op == "AND":
            return np.logical_and(a, b)
        return np.logical_or(a, b)

    def columns(self):
        return self.left.columns() | self.right.columns()


@dataclass(frozen=True)
class UnaryOp(Expr):
    op: str  # "NOT" or "-"
    operand: Expr

    def kind_in(self, schema):
        k = self.operand.kind_in(schema)
        if self.op == "NOT":
            if k != BOOL:
                raise KindError("NOT needs a boolean operand")
            return BOOL
        if k == BOOL or not k.is_numeric:
            raise KindError("unary minus needs a numeric operand")
        return k

    def evaluate(self, r):
        self.kind_in(r.schema)
        v = self.operand.evaluate(r)
        return np.logical_not(v) if self.op == "NOT" else np.negative(v)

    def columns(self):
        return self.operand.columns()


TRUE = Literal(True)


def conjuncts(e: Expr) -> list[Expr]:
    if isinstance(e, BinaryOp) and e.op == "AND":
        return conjuncts(e.left) + conjuncts(e.right)
    return [e]


def conjoin(parts: Sequence[Expr]) -> Expr:
    out = None
    for p in parts:
        out = p if out is None else BinaryOp("AND", out, p)
    return TRUE if out is None else out


def _column_from_array(values: np.ndarray, kind) -> Column:
    if kind == BOOL:
        raise KindError("boolean expressions cannot be stored as a column")
    return Column(kind, values)


# -- operators --------------------------------------------------------------


def select(r: Relation, predicate: Expr) -> Relation:
    if predicate.kind_in(r.schema) != BOOL:
        raise KindError("selection predicate must be boolean")
    mask = predicate.evaluate(r)
    return take_rows(r, np.flatnonzero(mask))


def project(r: Relation, exprs: Sequence[tuple[Expr, str]]) -> Relation:
    names = [n for _, n in exprs]
    if len(set(names)) != len(names):
        raise DuplicateAttributeError(f"duplicate output names {names!r}")
    attrs, cols = [], []
    for expr, name in exprs:
        kind = expr.kind_in(r.schema)
        col = _column_from_array(expr.evaluate(r), kind)
        attrs.append(Attribute(name, col.kind))
        cols.append(col)
    out = Relation(Schema(attrs), cols)
    out._nrows = len(r)
    return out


def rename(r: Relation, mapping: dict[str, str]) -> Relation:
    for old in mapping:
        r.schema.index(old)
    new_names = [mapping.get(a.name, a.name) for a in r.schema]
    if len(set(new_names)) != len(new_names):
        raise DuplicateAttributeError(f"rename produces duplicate names {new_names!r}")
    schema = Schema(Attribute(n, a.kind) for n, a in zip(new_names, r.schema))
    out = Relation(schema, r.columns, r.name)
    out._nrows = len(r)
    return out


def _check_disjoint(r: Relation, s: Relation):
    clash = set(r.names) & set(s.names)
    if clash:
        raise SchemaError(f"ambiguous column reference: {sorted(clash)} on both sides; rename first")


def _pair(r: Relation, s: Relation, left_idx, right_idx) -> Relation:
    return concat_columns([take_rows(r, left_idx), take_rows(s, right_idx)])


def cross(r: Relation, s: Relation) -> Relation:
    _check_disjoint(r, s)
    n, m = len(r), len(s)
    return _pair(r, s, np.repeat(np.arange(n), m), np.tile(np.arange(m), n))


def _equi_keys(pred: Expr, r: Relation, s: Relation):
    """Split conjuncts into (r_col, s_col) equality pairs and a residual."""
    pairs, rest = [], []
    for c in conjuncts(pred):
        if (isinstance(c, BinaryOp) and c.op == "="
                and isinstance(c.left, ColumnRef) and isinstance(c.right, ColumnRef)):
            lname, rname = c.left.name, c.right.name
            if lname in r.schema and rname in s.schema:
                pairs.append((lname, rname))
                continue
            if rname in r.schema and lname in s.schema:
                pairs.append((rname, lname))
                continue
        rest.append(c)
    return pairs, rest


def join(r: Relation, s: Relation, predicate: Expr) -> Relation:
    """Theta join; equality conjuncts between the two sides use a hash table.

    Output order is the nested-loop order either way: left rows in order,
    and for each left row its matching right rows in order.
    """
    _check_disjoint(r, s)
    combined = r.schema + s.schema
    if predicate.kind_in(combined) != BOOL:
        raise KindError("join predicate must be boolean")
    for name in predicate.columns():
        if name not in combined:
            raise UnknownAttributeError(name, combined.names)
    pairs, rest = _equi_keys(predicate, r, s)
    if not pairs:
        candidate = cross(r, s)
        return select(candidate, predicate)
    for lname, rname in pairs:
        if r.schema.kind(lname).is_numeric != s.schema.kind(rname).is_numeric:
            raise KindError(f"cannot compare {lname} with {rname}")
    table: dict = {}
    right_keys = zip(*(s.column(b).tolist() for _, b in pairs))
    for j, key in enumerate(right_keys):
        table.setdefault(key, []).append(j)
    left_idx, right_idx = [], []
    left_keys = zip(*(r.column(a).tolist() for a, _ in pairs))
    for i, key in enumerate(left_keys):
        for j in table.get(key, ()):
            left_idx.append(i)
            right_idx.append(j)
    joined = _pair(r, s, np.array(left_idx, dtype=np.int64), np.array(right_idx, dtype=np.int64))
    return select(joined, conjoin(rest)) if rest else joined


AGG_FUNCS = ("COUNT", "SUM", "AVG", "MIN", "MAX")


@dataclass(frozen=True)
class AggSpec:
    func: str
    arg: Expr | None  # None means COUNT(*)
    name: str

    def result_kind(self, schema: Schema) -> Kind:
        f = self.func
        if f not in AGG_FUNCS:
            raise KindError(f"unknown aggregate {f}")
        if self.arg is None:
            if f != "COUNT":
                raise KindError(f"{f}(*) is not allowed")
            return Kind.INT64
        k = self.arg.kind_in(schema)
        if f == "COUNT":
            return Kind.INT64
        if k == BOOL or not k.is_numeric:
            raise KindError(f"{f} needs a numeric argument")
        if f == "AVG":
            return Kind.FLOAT64
        return k


def _reduce(func: str, values: np.ndarray, count: int):
    if func == "COUNT":
        return count
    if func == "SUM":
        return values.sum() if count else values.dtype.type(0)
    if count == 0:
        raise EvaluationError(f"{func} over an empty input has no value")
    if func == "AVG":
        return float(values.astype(np.float64).mean())
    return values.min() if func == "MIN" else values.max()


def aggregate(r: Relation, group_by: Sequence[str], aggs: Sequence[AggSpec]) -> Relation:
    """Grouped aggregation; groups appear in order of first occurrence."""
    kinds = [a.result_kind(r.schema) for a in aggs]
    out_names = list(group_by) + [a.name for a in aggs]
    if len(set(out_names)) != len(out_names):
        raise DuplicateAttributeError(f"duplicate output names {out_names!r}")
    args = [a.arg.evaluate(r) if a.arg is not None else None for a in aggs]
    if group_by:
        keys = zip(*(r.column(g).tolist() for g in group_by))
        groups: dict = {}
        for i, key in enumerate(keys):
            groups.setdefault(key, []).append(i)
        members = [np.array(v, dtype=np.int64) for v in groups.values()]
    else:
        members = [np.arange(len(r))]
    cols = []
    for g in group_by:
        col = r.column(g)
        firsts = np.array([m[0] for m in members], dtype=np.int64)
        cols.append(Column(col.kind, col.values[firsts]))
    for spec, kind, vals in zip(aggs, kinds, args):
        out = [_reduce(spec.func, vals[m] if vals is not None else None, len(m)) for m in members]
        cols.append(Column(kind, out if kind is not Kind.TEXT else [str(v) for v in out]))
    schema = Schema(Attribute(n, c.kind) for n, c in zip(out_names, cols))
    out = Relation(schema, cols)
    out._nrows = len(members)
    return out


def order_by(r: Relation, keys: Sequence[tuple[str, bool]]) -> Relation:
    """Stable sort by (attribute, descending) pairs."""
    idx = np.arange(len(r))
    for name, descending in reversed(list(keys)):
        key = sort_key(r.column(name))[idx]
        idx = idx[np.argsort(-key if descending else key, kind="stable")]
    return take_rows(r, idx)
