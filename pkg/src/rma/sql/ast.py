"""Syntax tree of the SQL subset and its renderer back to text.

Source positions are carried for error messages but ignored by equality,
so ``parse(render(ast)) == ast``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .lexer import KEYWORDS

Pos = tuple  # (line, col)


def _pos():
    return field(default=None, compare=False, repr=False)


# -- expressions ---------------------------------------------------------------


@dataclass(frozen=True)
class Name:
    parts: tuple[str, ...]
    pos: Pos | None = _pos()

    @property
    def name(self) -> str:
        return self.parts[-1]

    @property
    def qualifier(self) -> str | None:
        return self.parts[0] if len(self.parts) > 1 else None


@dataclass(frozen=True)
class Const:
    value: object
    pos: Pos | None = _pos()


@dataclass(frozen=True)
class Binary:
    op: str
    left: object
    right: object
    pos: Pos | None = _pos()


@dataclass(frozen=True)
class Unary:
    op: str
    operand: object
    pos: Pos | None = _pos()


@dataclass(frozen=True)
class Call:
    func: str
    arg: object | None  # None means '*'
    pos: Pos | None = _pos()


# -- select list and from clause ---------------------------------------------------


@dataclass(frozen=True)
class Star:
    qualifier: str | None = None
    pos: Pos | None = _pos()


@dataclass(frozen=True)
class SelectItem:
    expr: object
    alias: str | None = None


@dataclass(frozen=True)
class OrderItem:
    name: Name
    descending: bool = False


@dataclass(frozen=True)
class TableRef:
    name: str
    alias: str | None = None
    pos: Pos | None = _pos()


@dataclass(frozen=True)
class SubqueryRef:
    query: "Query"
    alias: str
    pos: Pos | None = _pos()


@dataclass(frozen=True)
class RmaArgument:
    source: object
    order: tuple[str, ...]
    pos: Pos | None = _pos()


@dataclass(frozen=True)
class RmaCallRef:
    op: str
    args: tuple[RmaArgument, ...]
    context: str | None = None
    alias: str | None = None
    pos: Pos | None = _pos()


@dataclass(frozen=True)
class Join:
    left: object
    right: object
    kind: str  # "inner" or "cross"
    condition: object | None = None
    pos: Pos | None = _pos()


@dataclass(frozen=True)
class Query:
    select: tuple[object, ...]
    from_: tuple[object, ...]
    where: object | None = None
    group_by: tuple[Name, ...] = ()
    order_by: tuple[OrderItem, ...] = ()
    pos: Pos | None = _pos()


# -- rendering -----------------------------------------------------------------------

_PLAIN = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")

_PRECEDENCE = {"OR": 1, "AND": 2, "NOT": 3, "=": 4, "<>": 4, "<": 4, ">": 4, "<=": 4, ">=": 4,
               "+": 5, "-": 5, "*": 6, "/": 6, "NEG": 7}


def ident(name: str) -> str:
    if _PLAIN.match(name) and name.upper() not in KEYWORDS:
        return name
    return '"' + name.replace('"', '""') + '"'


def _prec(e) -> int:
    if isinstance(e, Binary):
        return _PRECEDENCE[e.op]
    if isinstance(e, Unary):
        return _PRECEDENCE["NOT" if e.op == "NOT" else "NEG"]
    return 8


def render_expr(e) -> str:
    if isinstance(e, Name):
        return ".".join(ident(p) for p in e.parts)
    if isinstance(e, Const):
        v = e.value
        if isinstance(v, bool):
            return "TRUE" if v else "FALSE"
        if isinstance(v, str):
            return "'" + v.replace("'", "''") + "'"
        return repr(v)
    if isinstance(e, Call):
        return f"{e.func}({'*' if e.arg is None else render_expr(e.arg)})"
    if isinstance(e, Unary):
        inner = render_expr(e.operand)
        # "--" would start a comment
        if _prec(e.operand) < _prec(e) or (e.op == "-" and inner.startswith("-")):
            inner = f"({inner})"
        return f"NOT {inner}" if e.op == "NOT" else f"-{inner}"
    if isinstance(e, Binary):
        p = _prec(e)
        left, right = render_expr(e.left), render_expr(e.right)
        # comparisons do not chain, so they parenthesize an equal-precedence left child too
        if _prec(e.left) < p or (p == _PRECEDENCE["="] and _prec(e.left) == p):
            left = f"({left})"
        # operators are left-associative, so an equal-precedence right child needs parentheses
        if _prec(e.right) <= p:
            right = f"({right})"
        return f"{left} {e.op} {right}"
    raise TypeError(f"not an expression: {e!r}")


def _render_from(f) -> str:
    if isinstance(f, TableRef):
        return ident(f.name) + (f" AS {ident(f.alias)}" if f.alias else "")
    if isinstance(f, SubqueryRef):
        return f"({render(f.query, terminate=False)}) AS {ident(f.alias)}"
    if isinstance(f, RmaCallRef):
        args = ", ".join(f"{_render_from(a.source)} BY {', '.join(ident(o) for o in a.order)}" for a in f.args)
        named = f" NAMED {ident(f.context)}" if f.context else ""
        alias = f" AS {ident(f.alias)}" if f.alias else ""
        return f"{f.op}({args}{named}){alias}"
    if isinstance(f, Join):
        left = _render_from(f.left)
        right = _render_from(f.right)
        if isinstance(f.right, Join):
            right = f"({right})"
        if f.kind == "cross":
            return f"{left} CROSS JOIN {right}"
        return f"{left} JOIN {right} ON {render_expr(f.condition)}"
    raise TypeError(f"not a from item: {f!r}")


def render(q: Query, terminate: bool = True) -> str:
    items = []
    for item in q.select:
        if isinstance(item, Star):
            items.append(f"{ident(item.qualifier)}.*" if item.qualifier else "*")
        else:
            text = render_expr(item.expr)
            items.append(text + (f" AS {ident(item.alias)}" if item.alias else ""))
    parts = [f"SELECT {', '.join(items)}", f"FROM {', '.join(_render_from(f) for f in q.from_)}"]
    if q.where is not None:
        parts.append(f"WHERE {render_expr(q.where)}")
    if q.group_by:
        parts.append("GROUP BY " + ", ".join(render_expr(g) for g in q.group_by))
    if q.order_by:
        parts.append("ORDER BY " + ", ".join(
            render_expr(o.name) + (" DESC" if o.descending else "") for o in q.order_by))
    return " ".join(parts) + (";" if terminate else "")
