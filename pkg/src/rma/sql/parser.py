"""Recursive-descent parser for SELECT statements with relational matrix
operations as table functions in the FROM clause.

Grammar (core)::

    query     := SELECT select_list FROM from_list [WHERE expr]
                 [GROUP BY names] [ORDER BY order_items] [';']
    from_list := from_item (',' from_item | [INNER] JOIN from_item ON expr
                 | CROSS JOIN from_item)*
    from_item := table [[AS] alias] | '(' query ')' [AS] alias
               | rma_call [[AS] alias]
    rma_call  := op '(' rma_arg [',' rma_arg] [NAMED ident] ')'
    rma_arg   := from_item BY ident (',' ident)*
"""

from __future__ import annotations

from ..errors import SqlSyntaxError
from .ast import (
    Binary,
    Call,
    Const,
    Join,
    Name,
    OrderItem,
    Query,
    RmaArgument,
    RmaCallRef,
    SelectItem,
    Star,
    SubqueryRef,
    TableRef,
    Unary,
)
from .lexer import Token, tokenize

RMA_OPS = frozenset({
    "emu", "mmu", "opd", "cpd", "add", "sub", "tra", "sol", "inv", "evc",
    "evl", "qqr", "rqr", "dsv", "usv", "vsv", "det", "rnk", "chf",
})
AGGREGATES = frozenset({"COUNT", "SUM", "AVG", "MIN", "MAX"})
COMPARISONS = ("=", "<>", "<", ">", "<=", ">=")


class Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.i = 0

    # -- token helpers ---------------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.tokens[min(self.i + k, len(self.tokens) - 1)]

    def at(self, type_, value=None, tok=None) -> bool:
        t = tok or self.tok
        return t.type == type_ and (value is None or t.value == value)

    def at_keyword(self, *words) -> bool:
        return self.tok.type == "KEYWORD" and self.tok.value in words

    def at_symbol(self, *syms) -> bool:
        return self.tok.type == "SYMBOL" and self.tok.value in syms

    def next(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def error(self, expected):
        t = self.tok
        raise SqlSyntaxError(f"unexpected {t.describe()}", t.line, t.col, expected)

    def expect_keyword(self, word) -> Token:
        if not self.at_keyword(word):
            self.error([word])
        return self.next()

    def expect_symbol(self, sym) -> Token:
        if not self.at_symbol(sym):
            self.error([repr(sym)])
        return self.next()

    def expect_ident(self, what="identifier") -> str:
        if self.tok.type != "IDENT":
            self.error([what])
        return self.next().value

    # -- statements --------------------------------------------------------------

    def parse_statement(self) -> Query:
        q = self.parse_query()
        if self.at_symbol(";"):
            self.next()
        if self.tok.type != "EOF":
            self.error(["';'", "end of input"])
        return q

    def parse_query(self) -> Query:
        start = self.expect_keyword("SELECT")
        select = self.parse_select_list()
        self.expect_keyword("FROM")
        from_ = self.parse_from_list()
        where = None
        group_by: tuple = ()
        order_by: tuple = ()
        if self.at_keyword("WHERE"):
            self.next()
            where = self.parse_expr()
        if self.at_keyword("GROUP"):
            self.next()
            self.expect_keyword("BY")
            group_by = tuple(self.parse_name_list())
        if self.at_keyword("ORDER"):
            self.next()
            self.expect_keyword("BY")
            items = []
            while True:
                name = self.parse_name()
                desc = False
                if self.at_keyword("ASC", "DESC"):
                    desc = self.next().value == "DESC"
                items.append(OrderItem(name, desc))
                if not self.at_symbol(","):
                    break
                self.next()
            order_by = tuple(items)
        return Query(tuple(select), tuple(from_), where, group_by, order_by, pos=(start.line, start.col))

    def parse_select_list(self):
        items = []
        while True:
            t = self.tok
            if self.at_symbol("*"):
                self.next()
                items.append(Star(pos=(t.line, t.col)))
            elif self.tok.type == "IDENT" and self.at("SYMBOL", ".", self.peek()) and self.at("SYMBOL", "*", self.peek(2)):
                qual = self.next().value
                self.next()
                self.next()
                items.append(Star(qual, pos=(t.line, t.col)))
            else:
                expr = self.parse_expr()
                alias = None
                if self.at_keyword("AS"):
                    self.next()
                    alias = self.expect_ident("alias")
                elif self.tok.type == "IDENT":
                    alias = self.next().value
                items.append(SelectItem(expr, alias))
            if not self.at_symbol(","):
                return items
            self.next()

    def parse_name_list(self):
        names = [self.parse_name()]
        while self.at_symbol(","):
            self.next()
            names.append(self.parse_name())
        return names

    def parse_name(self) -> Name:
        t = self.tok
        parts = [self.expect_ident("column name")]
        if self.at_symbol("."):
            self.next()
            parts.append(self.expect_ident("column name"))
        return Name(tuple(parts), pos=(t.line, t.col))

    # -- from clause --------------------------------------------------------------

    def parse_from_list(self):
        items = [self.parse_from_item()]
        while True:
            t = self.tok
            if self.at_symbol(","):
                self.next()
                items.append(self.parse_from_item())
            elif self.at_keyword("CROSS"):
                self.next()
                self.expect_keyword("JOIN")
                right = self.parse_from_item()
                items[-1] = Join(items[-1], right, "cross", pos=(t.line, t.col))
            elif self.at_keyword("JOIN", "INNER"):
                if self.at_keyword("INNER"):
                    self.next()
                self.expect_keyword("JOIN")
                right = self.parse_from_item()
                self.expect_keyword("ON")
                cond = self.parse_expr()
                items[-1] = Join(items[-1], right, "inner", cond, pos=(t.line, t.col))
            else:
                return items

    def parse_alias(self, required=False):
        if self.at_keyword("AS"):
            self.next()
            return self.expect_ident("alias")
        if self.tok.type == "IDENT" and not self.at("KEYWORD", "BY", self.peek()):
            return self.next().value
        if self.tok.type == "IDENT" and self.at("KEYWORD", "BY", self.peek()):
            # "t BY ..." inside an rma argument: t is the alias only if
            # the item itself was not a bare name
            return self.next().value
        if required:
            self.error(["AS", "alias"])
        return None

    def parse_from_item(self):
        t = self.tok
        pos = (t.line, t.col)
        if self.at_symbol("("):
            self.next()
            if not self.at_keyword("SELECT"):
                self.error(["SELECT"])
            q = self.parse_query()
            self.expect_symbol(")")
            if not (self.at_keyword("AS") or self.tok.type == "IDENT"):
                t2 = self.tok
                raise SqlSyntaxError("a derived table needs an alias", t2.line, t2.col, ["AS", "alias"])
            alias = self.parse_alias(required=True)
            return SubqueryRef(q, alias, pos=pos)
        if self.tok.type == "IDENT" and not self.tok.quoted and self.tok.value.lower() in RMA_OPS \
                and self.at("SYMBOL", "(", self.peek()):
            return self.parse_rma_call()
        name = self.expect_ident("table name")
        alias = self.parse_alias()
        return TableRef(name, alias, pos=pos)

    def parse_rma_call(self) -> RmaCallRef:
        t = self.next()
        op = t.value.lower()
        self.expect_symbol("(")
        args = [self.parse_rma_arg()]
        if self.at_symbol(","):
            self.next()
            args.append(self.parse_rma_arg())
        context = None
        if self.at_keyword("NAMED"):
            self.next()
            context = self.expect_ident("context attribute name")
        self.expect_symbol(")")
        alias = None
        if self.at_keyword("AS"):
            self.next()
            alias = self.expect_ident("alias")
        elif self.tok.type == "IDENT" and not self.at("KEYWORD", "BY", self.peek()):
            alias = self.next().value
        return RmaCallRef(op, tuple(args), context, alias, pos=(t.line, t.col))

    def parse_rma_arg(self) -> RmaArgument:
        t = self.tok
        source = self.parse_from_item()
        self.expect_keyword("BY")
        order = [self.expect_ident("order attribute")]
        # a comma continues the order list unless a new from item starts
        while self.at_symbol(",") and self._order_attr_follows():
            self.next()
            order.append(self.expect_ident("order attribute"))
        return RmaArgument(source, tuple(order), pos=(t.line, t.col))

    def _order_attr_follows(self) -> bool:
        nxt, after = self.peek(), self.peek(2)
        if nxt.type != "IDENT":
            return False
        return (after.type == "SYMBOL" and after.value in (",", ")")) or \
            (after.type == "KEYWORD" and after.value == "NAMED")

    # -- expressions ------------------------------------------------------------------

    def parse_expr(self):
        return self.parse_or()

    def _binary(self, sub, ops, keyword=False):
        left = sub()
        while (self.at_keyword(*ops) if keyword else self.at_symbol(*ops)):
            t = self.next()
            right = sub()
            left = Binary(t.value, left, right, pos=(t.line, t.col))
        return left

    def parse_or(self):
        return self._binary(self.parse_and, ("OR",), keyword=True)

    def parse_and(self):
        return self._binary(self.parse_not, ("AND",), keyword=True)

    def parse_not(self):
        if self.at_keyword("NOT"):
            t = self.next()
            return Unary("NOT", self.parse_not(), pos=(t.line, t.col))
        return self.parse_comparison()

    def parse_comparison(self):
        left = self.parse_additive()
        if self.at_symbol(*COMPARISONS):
            t = self.next()
            right = self.parse_additive()
            left = Binary(t.value, left, right, pos=(t.line, t.col))
        return left

    def parse_additive(self):
        return self._binary(self.parse_multiplicative, ("+", "-"))

    def parse_multiplicative(self):
        return self._binary(self.parse_unary, ("*", "/"))

    def parse_unary(self):
        if self.at_symbol("-"):
            t = self.next()
            operand = self.parse_unary()
            if isinstance(operand, Const) and isinstance(operand.value, (int, float)) \
                    and not isinstance(operand.value, bool):
                return Const(-operand.value, pos=(t.line, t.col))
            return Unary("-", operand, pos=(t.line, t.col))
        return self.parse_primary()

    def parse_primary(self):
        t = self.tok
        pos = (t.line, t.col)
        if t.type == "NUMBER":
            self.next()
            text = t.value
            if any(c in text for c in ".eE"):
                return Const(float(text), pos=pos)
            return Const(int(text), pos=pos)
        if t.type == "STRING":
            self.next()
            return Const(t.value, pos=pos)
        if self.at_keyword("TRUE", "FALSE"):
            self.next()
            return Const(t.value == "TRUE", pos=pos)
        if self.at_symbol("("):
            self.next()
            e = self.parse_expr()
            self.expect_symbol(")")
            return e
        if t.type == "IDENT":
            if not t.quoted and t.value.upper() in AGGREGATES and self.at("SYMBOL", "(", self.peek()):
                self.next()
                self.next()
                if self.at_symbol("*"):
                    self.next()
                    arg = None
                else:
                    arg = self.parse_expr()
                self.expect_symbol(")")
                return Call(t.value.upper(), arg, pos=pos)
            return self.parse_name()
        self.error(["expression"])


def parse(text: str) -> Query:
    return Parser(text).parse_statement()
