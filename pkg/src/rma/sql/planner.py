"""Lowering of a parsed query to an executable plan.

Every plan node knows its output *scope* before execution: a sequence of
entries, each naming one column by (qualifier, name) together with the
internal column name it is stored under and its kind.  Columns produced by
a column cast (``tra``, ``usv``, ``opd``) are named after data values, so
their names are only known at run time; such a node exposes a single
*deferred* entry standing for the whole group.  Deferred columns are
always float64, which keeps type checking static.

Execution returns a :class:`Bound` relation: the relation plus, per scope
entry, the internal names of the columns that entry covers.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

from .. import algebra
from ..algebra import BOOL, AggSpec, BinaryOp, ColumnRef, Literal, UnaryOp
from ..bridge import (
    SHAPE_TYPES,
    SORT_AVOIDING_OPS,
    OpCode,
    RmaArg,
    RmaCall,
    apply_rma,
    check_cardinality,
)
from ..columnar import Attribute, Kind, Relation, Schema
from ..errors import ExecutionError, KindError, PlanError, RmaError, SqlError
from . import ast

DEFAULT_CONTEXT = "C"


@dataclass(frozen=True)
class Entry:
    qualifier: str | None
    name: str | None  # None marks a deferred group
    internal: str | None
    kind: Kind | None

    @property
    def deferred(self) -> bool:
        return self.name is None


@dataclass(frozen=True)
class Bound:
    relation: Relation
    groups: tuple[tuple[str, ...], ...]


def _plain_groups(r: Relation) -> tuple[tuple[str, ...], ...]:
    return tuple((n,) for n in r.names)


def _where(pos):
    return pos if pos is not None else (None, None)


def _plan_error(message, pos) -> PlanError:
    return PlanError(message, *_where(pos))


# -- plan nodes -----------------------------------------------------------------------


class Node:
    scope: tuple[Entry, ...]
    pos = None

    def run(self) -> Bound:
        try:
            return self._run()
        except SqlError:
            raise
        except RmaError as e:
            raise ExecutionError(f"{type(e).__name__}: {e}", *_where(self.pos)) from e

    def _run(self) -> Bound:
        raise NotImplementedError

    def execute(self) -> Relation:
        return self.run().relation

    def predicted_schema(self) -> list[tuple[str, Kind] | None]:
        """Output (name, kind) per entry; ``None`` for a deferred group."""
        return [None if e.deferred else (e.name, e.kind) for e in self.scope]


class Scan(Node):
    def __init__(self, table: str, relation: Relation, qualifier: str, pos=None):
        self.table, self.relation, self.pos = table, relation, pos
        self.scope = tuple(Entry(qualifier, n, n, k) for n, k in zip(relation.names, relation.schema.kinds))

    def _run(self):
        return Bound(self.relation, _plain_groups(self.relation))


class Requalify(Node):
    """Give every column of the child a new qualifier (table alias)."""

    def __init__(self, child: Node, qualifier: str | None, pos=None):
        self.child, self.pos = child, pos
        self.scope = tuple(replace(e, qualifier=qualifier) for e in child.scope)

    def _run(self):
        return self.child.run()


class Rename(Node):
    def __init__(self, child: Node, mapping: dict[str, str], pos=None):
        self.child, self.mapping, self.pos = child, mapping, pos
        self.scope = tuple(replace(e, internal=mapping.get(e.internal, e.internal)) for e in child.scope)

    def _run(self):
        b = self.child.run()
        if not self.mapping:
            return b
        groups = tuple(tuple(self.mapping.get(n, n) for n in g) for g in b.groups)
        return Bound(algebra.rename(b.relation, self.mapping), groups)


class Filter(Node):
    def __init__(self, child: Node, predicate, pos=None):
        self.child, self.predicate, self.pos = child, predicate, pos
        self.scope = child.scope

    def _run(self):
        b = self.child.run()
        return Bound(algebra.select(b.relation, self.predicate), b.groups)


class Product(Node):
    """Cross product, or inner join when a predicate is given."""

    def __init__(self, left: Node, right: Node, predicate=None, pos=None):
        self.left, self.right, self.predicate, self.pos = left, right, predicate, pos
        self.scope = left.scope + right.scope

    def _run(self):
        lb, rb = self.left.run(), self.right.run()
        if self.predicate is None:
            rel = algebra.cross(lb.relation, rb.relation)
        else:
            rel = algebra.join(lb.relation, rb.relation, self.predicate)
        return Bound(rel, lb.groups + rb.groups)


class Aggregate(Node):
    def __init__(self, child: Node, group_entries: Sequence[Entry], aggs: Sequence[AggSpec],
                 agg_kinds: Sequence[Kind], pos=None):
        self.child, self.aggs, self.pos = child, list(aggs), pos
        self.group_by = [e.internal for e in group_entries]
        self.scope = tuple(group_entries) + tuple(
            Entry(None, a.name, a.name, k) for a, k in zip(aggs, agg_kinds))

    def _run(self):
        b = self.child.run()
        rel = algebra.aggregate(b.relation, self.group_by, self.aggs)
        return Bound(rel, _plain_groups(rel))


class Sort(Node):
    def __init__(self, child: Node, keys: Sequence[tuple[str, bool]], pos=None):
        self.child, self.keys, self.pos = child, list(keys), pos
        self.scope = child.scope

    def _run(self):
        b = self.child.run()
        return Bound(algebra.order_by(b.relation, self.keys), b.groups)


@dataclass(frozen=True)
class OutputExpr:
    expr: object
    name: str
    kind: Kind


@dataclass(frozen=True)
class OutputGroup:
    """Columns of one child scope entry, copied under their own names."""

    index: int
    entry: Entry


class Project(Node):
    def __init__(self, child: Node, items: Sequence[OutputExpr | OutputGroup], pos=None):
        self.child, self.items, self.pos = child, list(items), pos
        scope = []
        for item in self.items:
            if isinstance(item, OutputExpr):
                scope.append(Entry(None, item.name, item.name, item.kind))
            else:
                e = item.entry
                scope.append(Entry(None, e.name, e.name, e.kind) if not e.deferred else Entry(None, None, None, None))
        self.scope = tuple(scope)

    def _run(self):
        b = self.child.run()
        exprs, groups = [], []
        for item in self.items:
            if isinstance(item, OutputExpr):
                exprs.append((item.expr, item.name))
                groups.append((item.name,))
            elif item.entry.deferred:
                names = b.groups[item.index]
                exprs.extend((ColumnRef(n), n) for n in names)
                groups.append(tuple(names))
            else:
                exprs.append((ColumnRef(b.groups[item.index][0]), item.entry.name))
                groups.append((item.entry.name,))
        return Bound(algebra.project(b.relation, exprs), tuple(groups))


class ApplyRma(Node):
    def __init__(self, op: OpCode, args: Sequence[tuple[Node, tuple[str, ...], str | None]],
                 context_name: str, scope: tuple[Entry, ...], pos=None):
        self.op, self.args, self.context_name, self.pos = op, list(args), context_name, pos
        self.optimize = op in SORT_AVOIDING_OPS
        self.scope = scope

    def _run(self):
        rma_args = []
        for node, order, name in self.args:
            rel = node.execute()
            rma_args.append(RmaArg(rel.with_name(name), order))
        call = RmaCall(self.op, rma_args[0], rma_args[1] if len(rma_args) > 1 else None,
                       self.context_name, self.optimize)
        rel = apply_rma(call)
        return Bound(rel, self._groups(rel))

    def _groups(self, rel: Relation):
        # the single deferred entry (if any) covers every column not claimed
        # by a concrete entry; concrete entries come before and after it
        concrete = [e for e in self.scope if not e.deferred]
        if len(concrete) == len(self.scope):
            return _plain_groups(rel)
        names = list(rel.names)
        k = next(i for i, e in enumerate(self.scope) if e.deferred)
        after = len(self.scope) - k - 1
        head, tail = names[:k], names[len(names) - after:] if after else []
        middle = names[k:len(names) - after]
        return tuple((n,) for n in head) + (tuple(middle),) + tuple((n,) for n in tail)


@dataclass
class Plan:
    root: Node

    @property
    def scope(self):
        return self.root.scope

    def predicted_schema(self):
        return self.root.predicted_schema()

    def execute(self) -> Relation:
        return self.root.execute()


# -- name resolution ----------------------------------------------------------------


def _resolve(scope: Sequence[Entry], name: ast.Name):
    """Index of the entry ``name`` refers to, or ``("deferred", n)``."""
    q, n = name.qualifier, name.name
    hits = [i for i, e in enumerate(scope)
            if not e.deferred and e.name == n and (q is None or e.qualifier == q)]
    if len(hits) == 1:
        return hits[0]
    shown = ".".join(name.parts)
    if len(hits) > 1:
        raise _plan_error(f"ambiguous column reference {shown}; qualify it with a table name", name.pos)
    if q is not None and not any(e.qualifier == q for e in scope):
        raise _plan_error(f"unknown table or alias {q}", name.pos)
    if any(e.deferred and (q is None or e.qualifier == q) for e in scope):
        return ("deferred", n)
    available = ", ".join(e.name for e in scope if not e.deferred)
    raise _plan_error(f"unknown column {shown} (available: {available})", name.pos)


def _kind_schema(scope: Sequence[Entry], deferred_names=()) -> Schema:
    attrs = [Attribute(e.internal, e.kind) for e in scope if not e.deferred]
    known = {a.name for a in attrs}
    attrs += [Attribute(n, Kind.FLOAT64) for n in dict.fromkeys(deferred_names) if n not in known]
    return Schema(attrs)


class _Binder:
    """Translates AST expressions to algebra expressions over a scope."""

    def __init__(self, scope: Sequence[Entry], aggregates: list | None = None,
                 group_internals: set | None = None, input_scope=None):
        self.scope = scope
        self.aggregates = aggregates  # collects (Call, AggSpec) when grouping
        self.group_internals = group_internals
        self.input_scope = input_scope
        self.deferred: list[str] = []

    def bind(self, e):
        if isinstance(e, ast.Const):
            return Literal(e.value)
        if isinstance(e, ast.Name):
            if self.aggregates is not None:
                return self._grouped_name(e)
            hit = _resolve(self.scope, e)
            if isinstance(hit, tuple):
                self.deferred.append(hit[1])
                return ColumnRef(hit[1])
            return ColumnRef(self.scope[hit].internal)
        if isinstance(e, ast.Binary):
            return BinaryOp(e.op, self.bind(e.left), self.bind(e.right))
        if isinstance(e, ast.Unary):
            return UnaryOp(e.op, self.bind(e.operand))
        if isinstance(e, ast.Call):
            if self.aggregates is None:
                raise _plan_error(f"aggregate {e.func} is not allowed here", e.pos)
            return self._aggregate(e)
        raise TypeError(f"cannot bind {e!r}")

    def _grouped_name(self, e: ast.Name):
        hit = _resolve(self.input_scope, e)
        internal = hit[1] if isinstance(hit, tuple) else self.input_scope[hit].internal
        if internal not in self.group_internals:
            raise _plan_error(f"column {'.'.join(e.parts)} must appear in GROUP BY or inside an aggregate", e.pos)
        return ColumnRef(internal)

    def _aggregate(self, e: ast.Call):
        inner = _Binder(self.input_scope)
        arg = inner.bind(e.arg) if e.arg is not None else None
        if e.arg is not None and _contains_call(e.arg):
            raise _plan_error("aggregates cannot be nested", e.pos)
        self.deferred.extend(inner.deferred)
        name = f"#agg{len(self.aggregates)}"
        spec = AggSpec(e.func, arg, name)
        try:
            kind = spec.result_kind(_kind_schema(self.input_scope, inner.deferred))
        except KindError as err:
            raise _plan_error(str(err), e.pos) from err
        self.aggregates.append((spec, kind))
        return ColumnRef(name)


def _contains_call(e) -> bool:
    if isinstance(e, ast.Call):
        return True
    if isinstance(e, ast.Binary):
        return _contains_call(e.left) or _contains_call(e.right)
    if isinstance(e, ast.Unary):
        return _contains_call(e.operand)
    return False


def _expr_kind(expr, scope, deferred, pos):
    try:
        return expr.kind_in(_kind_schema(scope, deferred))
    except KindError as err:
        raise _plan_error(str(err), pos) from err


def _output_name(item: ast.SelectItem) -> str:
    if item.alias:
        return item.alias
    if isinstance(item.expr, ast.Name):
        return item.expr.name
    return ast.render_expr(item.expr)


# -- the planner --------------------------------------------------------------------------


class Planner:
    def __init__(self, catalog):
        self.catalog = catalog

    def plan(self, query: ast.Query) -> Plan:
        return Plan(self.plan_query(query))

    # queries

    def plan_query(self, q: ast.Query) -> Node:
        node = self.plan_from_list(q.from_)
        if q.where is not None:
            b = _Binder(node.scope)
            if _contains_call(q.where):
                raise _plan_error("aggregates are not allowed in WHERE", q.where.pos)
            pred = b.bind(q.where)
            if _expr_kind(pred, node.scope, b.deferred, q.where.pos) != BOOL:
                raise _plan_error("WHERE needs a boolean condition", q.where.pos)
            node = Filter(node, pred, q.where.pos)

        grouped = bool(q.group_by) or any(
            isinstance(i, ast.SelectItem) and _contains_call(i.expr) for i in q.select)
        if grouped:
            node, items = self._plan_grouped(node, q)
        else:
            items = self._select_items(node, q.select)

        names = [i.name for i in items if isinstance(i, OutputExpr)] + \
                [i.entry.name for i in items if isinstance(i, OutputGroup) and not i.entry.deferred]
        dups = sorted({n for n in names if names.count(n) > 1})
        if dups:
            raise _plan_error(f"duplicate output column name(s) {', '.join(dups)}; use AS to rename", q.pos)

        if not q.order_by:
            return Project(node, items, q.pos)
        out_names = set(names)
        if all(o.name.qualifier is None and o.name.name in out_names for o in q.order_by):
            proj = Project(node, items, q.pos)
            return Sort(proj, [(o.name.name, o.descending) for o in q.order_by], q.pos)
        keys = []
        for o in q.order_by:
            hit = _resolve(node.scope, o.name)
            keys.append((hit[1] if isinstance(hit, tuple) else node.scope[hit].internal, o.descending))
        return Project(Sort(node, keys, q.pos), items, q.pos)

    def _select_items(self, node: Node, select) -> list:
        items = []
        for item in select:
            if isinstance(item, ast.Star):
                matched = [(i, e) for i, e in enumerate(node.scope)
                           if item.qualifier is None or e.qualifier == item.qualifier]
                if not matched:
                    raise _plan_error(f"unknown table or alias {item.qualifier}", item.pos)
                items.extend(OutputGroup(i, e) for i, e in matched)
                continue
            b = _Binder(node.scope)
            expr = b.bind(item.expr)
            kind = _expr_kind(expr, node.scope, b.deferred, getattr(item.expr, "pos", None))
            if kind == BOOL:
                raise _plan_error("boolean expressions cannot be selected", getattr(item.expr, "pos", None))
            items.append(OutputExpr(expr, _output_name(item), kind))
        return items

    def _plan_grouped(self, node: Node, q: ast.Query):
        group_entries, group_internals = [], set()
        for g in q.group_by:
            hit = _resolve(node.scope, g)
            if isinstance(hit, tuple):
                raise _plan_error(f"cannot group by column {g.name} whose name is only known at run time", g.pos)
            e = node.scope[hit]
            if e.internal not in group_internals:
                group_entries.append(e)
                group_internals.add(e.internal)
        aggregates: list = []
        pending = []
        for item in q.select:
            if isinstance(item, ast.Star):
                raise _plan_error("SELECT * cannot be combined with aggregation", item.pos)
            b = _Binder(node.scope, aggregates, group_internals, node.scope)
            pending.append((item, b.bind(item.expr)))
        agg = Aggregate(node, group_entries, [a for a, _ in aggregates], [k for _, k in aggregates], q.pos)
        items = []
        for item, expr in pending:
            kind = _expr_kind(expr, agg.scope, (), getattr(item.expr, "pos", None))
            if kind == BOOL:
                raise _plan_error("boolean expressions cannot be selected", getattr(item.expr, "pos", None))
            items.append(OutputExpr(expr, _output_name(item), kind))
        return agg, items

    # from clause

    def plan_from_list(self, items) -> Node:
        node = self.plan_from_item(items[0])
        for item in items[1:]:
            node = self._combine(node, self.plan_from_item(item), None, getattr(item, "pos", None))
        return node

    def plan_from_item(self, item) -> Node:
        if isinstance(item, ast.TableRef):
            rel = self._table(item.name, item.pos)
            return Scan(item.name, rel, item.alias or item.name, item.pos)
        if isinstance(item, ast.SubqueryRef):
            return Requalify(self.plan_query(item.query), item.alias, item.pos)
        if isinstance(item, ast.RmaCallRef):
            return Requalify(self.plan_rma(item), item.alias, item.pos)
        if isinstance(item, ast.Join):
            left = self.plan_from_item(item.left)
            right = self.plan_from_item(item.right)
            return self._combine(left, right, item.condition if item.kind == "inner" else None, item.pos,
                                 joined=item.kind == "inner")
        raise TypeError(f"unknown from item {item!r}")

    def _table(self, name, pos) -> Relation:
        try:
            return self.catalog.get(name)
        except KeyError:
            raise _plan_error(f"unknown table {name}", pos) from None

    def _combine(self, left: Node, right: Node, condition, pos, joined=False) -> Node:
        lq = {e.qualifier for e in left.scope if e.qualifier is not None}
        rq = {e.qualifier for e in right.scope if e.qualifier is not None}
        same = lq & rq
        if same:
            raise _plan_error(f"table name {sorted(same)[0]} appears more than once; use an alias", pos)
        linternal = {e.internal for e in left.scope if not e.deferred}
        rinternal = {e.internal for e in right.scope if not e.deferred}
        clash = linternal & rinternal
        if clash:
            left = Rename(left, self._qualified_names(left.scope, clash), pos)
            right = Rename(right, self._qualified_names(right.scope, clash), pos)
        predicate = None
        if joined:
            b = _Binder(left.scope + right.scope)
            if _contains_call(condition):
                raise _plan_error("aggregates are not allowed in ON", condition.pos)
            predicate = b.bind(condition)
            if _expr_kind(predicate, left.scope + right.scope, b.deferred, condition.pos) != BOOL:
                raise _plan_error("ON needs a boolean condition", condition.pos)
        return Product(left, right, predicate, pos)

    @staticmethod
    def _qualified_names(scope, clash) -> dict[str, str]:
        mapping = {}
        for e in scope:
            if not e.deferred and e.internal in clash:
                mapping[e.internal] = f"{e.qualifier or '?'}.{e.internal}"
        return mapping

    # relational matrix operations

    def plan_rma(self, call: ast.RmaCallRef) -> Node:
        op = OpCode.parse(call.op)
        want = 2 if op.is_binary else 1
        if len(call.args) != want:
            raise _plan_error(f"{op.value} takes {'two arguments' if want == 2 else 'one argument'}, "
                              f"got {len(call.args)}", call.pos)
        args, infos = [], []
        for arg in call.args:
            node = self.plan_from_item(arg.source)
            name = self._relation_name(arg.source)
            if len(set(arg.order)) != len(arg.order):
                raise _plan_error(f"order schema ({', '.join(arg.order)}) repeats an attribute", arg.pos)
            entries = list(node.scope)
            for attr in arg.order:
                if not any(e.name == attr for e in entries) and not any(e.deferred for e in entries):
                    available = ", ".join(e.name for e in entries if not e.deferred)
                    raise _plan_error(f"unknown order attribute {attr} (available: {available})", arg.pos)
            app = [e for e in entries if e.deferred or e.name not in arg.order]
            for e in app:
                if not e.deferred and not e.kind.is_numeric:
                    raise _plan_error(f"NonNumericApplicationError: application attribute {e.name!r} "
                                      f"is {e.kind.value}, not numeric", arg.pos)
            if not app:
                raise _plan_error(f"the application schema of the {op.value} argument is empty", arg.pos)
            args.append((node, tuple(arg.order), name))
            infos.append((entries, app))
        try:
            check_cardinality(op, [a[1] for a in args])
        except RmaError as err:
            raise _plan_error(str(err), call.pos) from err
        context = call.context or DEFAULT_CONTEXT
        if SHAPE_TYPES[op].rows == "1" and args[0][2] is None:
            raise _plan_error(f"{op.value} needs a named argument relation (use an alias)", call.pos)
        scope = self._rma_scope(op, args, infos, context, call.pos)
        return ApplyRma(op, args, context, scope, call.pos)

    @staticmethod
    def _relation_name(source) -> str | None:
        if isinstance(source, ast.TableRef):
            return source.alias or source.name
        return getattr(source, "alias", None)

    def _rma_scope(self, op, args, infos, context, pos) -> tuple[Entry, ...]:
        shape = SHAPE_TYPES[op]
        (_, u_order, _), (u_entries, u_app) = args[0], infos[0]

        def order_entries(entries, order):
            found = {e.name: e for e in entries if not e.deferred}
            return [Entry(None, a, a, found[a].kind) if a in found else Entry(None, None, None, None)
                    for a in order]

        def app_entries(app):
            return [Entry(None, None, None, None) if e.deferred else Entry(None, e.name, e.name, Kind.FLOAT64)
                    for e in app]

        if shape.rows == "r1":
            ctx = order_entries(u_entries, u_order)
        elif shape.rows == "r*":
            ctx = order_entries(u_entries, u_order) + order_entries(infos[1][0], args[1][1])
        else:
            ctx = [Entry(None, context, context, Kind.TEXT)]
        if shape.cols in ("r1", "r2"):
            cols = [Entry(None, None, None, None)]
        elif shape.cols in ("c1", "c*"):
            cols = app_entries(u_app)
        elif shape.cols == "c2":
            cols = app_entries(infos[1][1])
        else:
            cols = [Entry(None, op.value, op.value, Kind.FLOAT64)]
        entries = ctx + cols
        if op in SORT_AVOIDING_OPS and op is not OpCode.QQR:
            v_app = infos[1][1]
            if not any(e.deferred for e in u_app + v_app) and len(u_app) != len(v_app):
                raise _plan_error(f"UnionCompatibilityError: {op.value} needs union compatible application "
                                  f"schemas, got {len(u_app)} and {len(v_app)} attributes", pos)
        names = [e.name for e in entries if not e.deferred]
        dups = sorted({n for n in names if names.count(n) > 1})
        if dups:
            raise _plan_error(f"ContextNameCollisionError: result schema of {op.value} repeats attribute "
                              f"name(s) {dups}; choose another name with NAMED", pos)
        # collapse runs of deferred entries into one group
        out: list[Entry] = []
        for e in entries:
            if e.deferred and out and out[-1].deferred:
                continue
            out.append(e)
        if sum(e.deferred for e in out) > 1:
            # more than one unknown region: treat the whole result as deferred
            return (Entry(None, None, None, None),)
        return tuple(out)


def plan(query: ast.Query, catalog) -> Plan:
    return Planner(catalog).plan(query)
