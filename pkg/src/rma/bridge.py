"""Relational matrix operations: linear algebra applied to relations.

An argument relation is split by its order schema into the order part
(row context) and the application part (the numbers).  The application
part is sorted by the order schema, handed to a matrix kernel, and the
kernel output is merged with context morphed according to the operation's
shape type, giving a relation again.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels
from .columnar import (
    Attribute,
    Column,
    Kind,
    Relation,
    Schema,
    SortPermutation,
    apply_permutation,
    project_columns,
    render_value,
    sort_permutation,
)
from .errors import (
    CastError,
    ContextNameCollisionError,
    DuplicateRowsError,
    KeyViolationError,
    MatrixError,
    MissingRelationNameError,
    NonNumericApplicationError,
    OrderSchemaCardinalityError,
    RmaError,
    SchemaError,
    UnionCompatibilityError,
)


class OpCode(str, enum.Enum):
    EMU = "emu"
    MMU = "mmu"
    OPD = "opd"
    CPD = "cpd"
    ADD = "add"
    SUB = "sub"
    TRA = "tra"
    SOL = "sol"
    INV = "inv"
    EVC = "evc"
    EVL = "evl"
    QQR = "qqr"
    RQR = "rqr"
    DSV = "dsv"
    USV = "usv"
    VSV = "vsv"
    DET = "det"
    RNK = "rnk"
    CHF = "chf"

    @property
    def is_binary(self) -> bool:
        return self in BINARY_OPS

    @classmethod
    def parse(cls, text: str) -> "OpCode":
        try:
            return cls(text.lower())
        except ValueError:
            raise RmaError(f"unknown relational matrix operation {text!r}") from None


BINARY_OPS = frozenset({OpCode.EMU, OpCode.MMU, OpCode.OPD, OpCode.CPD, OpCode.ADD, OpCode.SUB, OpCode.SOL})
ELEMENTWISE_OPS = frozenset({OpCode.ADD, OpCode.SUB, OpCode.EMU})
SORT_AVOIDING_OPS = frozenset({OpCode.QQR}) | ELEMENTWISE_OPS
SQUARE_OPS = frozenset({OpCode.INV, OpCode.EVC, OpCode.EVL, OpCode.CHF, OpCode.DET})


@dataclass(frozen=True)
class ShapeType:
    rows: str
    cols: str

    def __str__(self):
        return f"({self.rows},{self.cols})"


_SHAPES = {
    ("r1", "r1"): (OpCode.USV,),
    ("r1", "r2"): (OpCode.OPD,),
    ("r1", "c1"): (OpCode.INV, OpCode.EVC, OpCode.CHF, OpCode.QQR),
    ("r1", "c2"): (OpCode.MMU,),
    ("r1", "1"): (OpCode.EVL,),
    ("c1", "r1"): (OpCode.TRA,),
    # VSV returns the j x j right singular vectors, so it shares RQR's shape
    ("c1", "c1"): (OpCode.RQR, OpCode.DSV, OpCode.VSV),
    ("c1", "c2"): (OpCode.CPD, OpCode.SOL),
    ("r*", "c*"): (OpCode.EMU, OpCode.ADD, OpCode.SUB),
    ("1", "1"): (OpCode.DET, OpCode.RNK),
}
SHAPE_TYPES = {op: ShapeType(*shape) for shape, ops in _SHAPES.items() for op in ops}


def shape_type_of(op: OpCode | str) -> ShapeType:
    return SHAPE_TYPES[OpCode(op)]


@dataclass(frozen=True)
class RmaArg:
    relation: Relation
    order: tuple[str, ...]

    def __init__(self, relation: Relation, order: Sequence[str]):
        object.__setattr__(self, "relation", relation)
        object.__setattr__(self, "order", tuple(order))

    @property
    def application(self) -> tuple[str, ...]:
        return tuple(n for n in self.relation.names if n not in self.order)


@dataclass(frozen=True)
class RmaCall:
    op: OpCode
    first: RmaArg
    second: RmaArg | None = None
    context_name: str = "C"
    optimize: bool = field(default=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "op", OpCode(self.op))


# -- constructors and casts ---------------------------------------------------


def check_order_schema(r: Relation, order: Sequence[str]):
    if len(set(order)) != len(order):
        raise SchemaError(f"order schema {list(order)!r} repeats an attribute")
    for name in order:
        r.schema.index(name)


def check_key(r: Relation, order: Sequence[str]):
    """Order-part tuples must be pairwise distinct."""
    cols = [r.column(a).tolist() for a in order]
    seen = set()
    for i, key in enumerate(zip(*cols) if cols else (() for _ in range(len(r)))):
        if key in seen:
            shown = ", ".join(map(str, key)) or "()"
            raise KeyViolationError(
                f"order schema ({', '.join(order)}) is not a key: value ({shown}) occurs more than once")
        seen.add(key)


def _application_matrix(r: Relation, app: Sequence[str], p: SortPermutation | None) -> np.ndarray:
    if not app:
        raise MatrixError("the application schema is empty")
    if len(r) == 0:
        raise MatrixError("the argument relation is empty")
    cols = []
    for name in app:
        col = r.column(name)
        if not col.kind.is_numeric:
            raise NonNumericApplicationError(f"application attribute {name!r} is {col.kind.value}, not numeric")
        if p is not None:
            col = apply_permutation(col, p)
        cols.append(col.as_float())
    return np.column_stack(cols)


def _check_numeric(r: Relation, app: Sequence[str]):
    for name in app:
        kind = r.schema.kind(name)
        if not kind.is_numeric:
            raise NonNumericApplicationError(f"application attribute {name!r} is {kind.value}, not numeric")


def matrix_constructor(r: Relation, order: Sequence[str], complement: bool = False):
    """Order part (as a relation) or application part (as a matrix) of
    ``r``, with rows sorted by ``order``."""
    check_order_schema(r, order)
    check_key(r, order)
    p = sort_permutation(r, order)
    if complement:
        app = [n for n in r.names if n not in order]
        _check_numeric(r, app)
        return _application_matrix(r, app, p)
    part = project_columns(r, order)
    return Relation(part.schema, [apply_permutation(c, p) for c in part.columns], r.name)


def reduce(r: Relation, order: Sequence[str]) -> np.ndarray:
    """The matrix ``r`` reduces to under ``order``."""
    return matrix_constructor(r, order, complement=True)


def column_cast(r: Relation, attr: str) -> list[str]:
    """Attribute names made from the sorted values of key attribute ``attr``."""
    col = r.column(attr)
    p = sort_permutation(r, [attr])
    names = [render_value(v, col.kind) for v in col.values[p.indices].tolist()]
    if any(n == "" for n in names):
        raise CastError(f"attribute {attr!r} holds an empty value that cannot name an attribute")
    if len(set(names)) != len(names):
        raise CastError(f"attribute {attr!r} holds repeated values and cannot generate attribute names")
    return names


def schema_cast(attrs: Sequence[str]) -> Column:
    if not attrs:
        raise CastError("schema cast of an empty attribute list")
    return Column(Kind.TEXT, list(attrs))


def _flatten(parts) -> list[Column]:
    out = []
    for part in parts:
        if isinstance(part, Relation):
            out.extend(part.columns)
        elif isinstance(part, Column):
            out.append(part)
        else:
            m = np.asarray(part, dtype=np.float64)
            if m.ndim != 2:
                raise MatrixError("matrix parts must be two-dimensional")
            out.extend(Column(Kind.FLOAT64, m[:, j]) for j in range(m.shape[1]))
    return out


def relation_constructor(parts, schema: Schema | Sequence[str], name: str | None = None) -> Relation:
    """Concatenate aligned column groups and attach ``schema``; rows must be
    unique."""
    cols = _flatten(parts)
    if not isinstance(schema, Schema):
        names = list(schema)
        if len(names) != len(cols):
            raise SchemaError(f"schema has {len(names)} attributes, parts supply {len(cols)} columns")
        if len(set(names)) != len(names):
            dup = sorted({n for n in names if names.count(n) > 1})
            raise ContextNameCollisionError(f"result schema repeats attribute name(s) {dup}")
        schema = Schema(Attribute(n, c.kind) for n, c in zip(names, cols))
    elif len(schema) != len(cols):
        raise SchemaError(f"schema has {len(schema)} attributes, parts supply {len(cols)} columns")
    rel = Relation(schema, cols, name)
    rows = rel.rows()
    if len(set(rows)) != len(rows):
        raise DuplicateRowsError("relation constructor needs unique rows")
    return rel


# -- validation ------------------------------------------------------------------


def check_cardinality(op: OpCode, orders: Sequence[Sequence[str]]):
    """Operations whose result columns come from a column cast need a
    single-attribute order schema on the cast argument."""
    op = OpCode(op)
    if op in (OpCode.TRA, OpCode.USV) and len(orders[0]) != 1:
        raise OrderSchemaCardinalityError(
            f"the cardinality of the order schema of {op.value} must be one, got {len(orders[0])}")
    if op is OpCode.OPD and len(orders) > 1 and len(orders[1]) != 1:
        raise OrderSchemaCardinalityError(
            f"the cardinality of the second order schema of opd must be one, got {len(orders[1])}")


def _validate(call: RmaCall):
    op = call.op
    if op.is_binary != (call.second is not None):
        want = "two arguments" if op.is_binary else "one argument"
        raise RmaError(f"{op.value} takes {want}")
    args = [call.first] + ([call.second] if call.second is not None else [])
    for arg in args:
        check_order_schema(arg.relation, arg.order)
    check_cardinality(op, [arg.order for arg in args])
    for arg in args:
        _check_numeric(arg.relation, arg.application)
        if not arg.application:
            raise MatrixError("the application schema is empty")
    if op in ELEMENTWISE_OPS:
        u, v = call.first, call.second
        if len(u.application) != len(v.application):
            raise UnionCompatibilityError(
                f"{op.value} needs union compatible application schemas, "
                f"got {len(u.application)} and {len(v.application)} attributes")
        overlap = set(u.order) & set(v.order)
        if overlap:
            raise ContextNameCollisionError(
                f"{op.value} needs disjoint order schemas; both contain {sorted(overlap)}")
    if SHAPE_TYPES[op].rows == "1" and not call.first.relation.name:
        raise MissingRelationNameError(f"{op.value} needs a named argument relation (use an alias)")
    for arg in args:
        check_key(arg.relation, arg.order)


# -- the pipeline ------------------------------------------------------------------


def _sorted_order_part(arg: RmaArg, p: SortPermutation | None) -> Relation:
    part = project_columns(arg.relation, arg.order)
    if p is None:
        return part
    return Relation(part.schema, [apply_permutation(c, p) for c in part.columns])


def _result_names(call: RmaCall) -> tuple[list[str], list[str]]:
    """Context attribute names and base-result attribute names."""
    op, shape = call.op, SHAPE_TYPES[call.op]
    u, v = call.first, call.second
    if shape.rows == "r1":
        ctx = list(u.order)
    elif shape.rows == "r*":
        ctx = list(u.order) + list(v.order)
    else:
        ctx = [call.context_name]
    if shape.cols == "r1":
        cols = column_cast(u.relation, u.order[0])
    elif shape.cols == "r2":
        cols = column_cast(v.relation, v.order[0])
    elif shape.cols in ("c1", "c*"):
        cols = list(u.application)
    elif shape.cols == "c2":
        cols = list(v.application)
    else:
        cols = [op.value]
    names = ctx + cols
    if len(set(names)) != len(names):
        dup = sorted({n for n in names if names.count(n) > 1})
        raise ContextNameCollisionError(f"result schema of {op.value} repeats attribute name(s) {dup}")
    return ctx, cols


def apply_rma(call: RmaCall) -> Relation:
    """Evaluate a relational matrix operation.

    With ``call.optimize`` the sort phase is skipped for ``qqr`` (the
    kernel is row-permutation equivariant) and reduced to aligning the
    second argument to the first for ``add``/``sub``/``emu``.  Both paths
    produce the same relation as a set of tuples.
    """
    _validate(call)
    op, shape = call.op, SHAPE_TYPES[call.op]
    u, v = call.first, call.second
    ctx_names, col_names = _result_names(call)

    # split + sort
    if call.optimize and op is OpCode.QQR:
        p1 = None
    else:
        p1 = sort_permutation(u.relation, u.order)
    p2 = sort_permutation(v.relation, v.order) if v is not None else None
    if call.optimize and op in ELEMENTWISE_OPS:
        # keep the first argument in place; pull the second into its order
        rank1 = p1.inverse().indices
        p2 = SortPermutation(p2.indices[rank1])
        p1 = None
    a = _application_matrix(u.relation, u.application, p1)
    b = _application_matrix(v.relation, v.application, p2) if v is not None else None

    # morph
    if shape.rows == "r1":
        x = [_sorted_order_part(u, p1)]
    elif shape.rows == "r*":
        x = [_sorted_order_part(u, p1), _sorted_order_part(v, p2)]
    elif shape.rows == "c1":
        x = [schema_cast(u.application)]
    else:
        x = [Column(Kind.TEXT, [u.relation.name])]

    # eval
    f = kernels.base_result(op.value.upper(), a, b)
    if f.shape[1] != len(col_names):
        raise MatrixError(f"{op.value} produced {f.shape[1]} columns, expected {len(col_names)}")

    # merge
    return relation_constructor(x + [f], ctx_names + col_names)


def result_order_schema(call: RmaCall) -> tuple[str, ...]:
    """Attribute list under which the result reduces to the base result."""
    shape = SHAPE_TYPES[call.op]
    if shape.rows == "r1":
        return call.first.order
    if shape.rows == "r*":
        return call.first.order + call.second.order
    return (call.context_name,)


@dataclass(frozen=True)
class Origins:
    row: list
    col: tuple[str, ...]


def origins_of(call: RmaCall) -> Origins:
    """Row and column origins an operation's result must carry."""
    op, shape = call.op, SHAPE_TYPES[call.op]
    u, v = call.first, call.second

    def order_rows(arg):
        return matrix_constructor(arg.relation, arg.order).rows()

    if shape.rows == "r1":
        row = order_rows(u)
    elif shape.rows == "r2":
        row = order_rows(v)
    elif shape.rows == "c1":
        row = [(n,) for n in u.application]
    elif shape.rows == "c2":
        row = [(n,) for n in v.application]
    elif shape.rows == "r*":
        row = [a + b for a, b in zip(order_rows(u), order_rows(v))]
    else:
        row = [(u.relation.name,)]

    if shape.cols == "r1":
        col = tuple(column_cast(u.relation, u.order[0]))
    elif shape.cols == "r2":
        col = tuple(column_cast(v.relation, v.order[0]))
    elif shape.cols in ("c1", "c*"):
        col = u.application
    elif shape.cols == "c2":
        col = v.application
    else:
        col = (op.value,)
    return Origins(row, col)


def rma(op: str, relation: Relation, order: Sequence[str], second: Relation | None = None,
        second_order: Sequence[str] = (), *, context_name: str = "C", optimize: bool = False) -> Relation:
    """Convenience wrapper around :func:`apply_rma`."""
    call = RmaCall(OpCode(op), RmaArg(relation, order),
                   RmaArg(second, second_order) if second is not None else None,
                   context_name, optimize)
    return apply_rma(call)
