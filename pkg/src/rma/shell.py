"""Interactive shell and batch runner.

Usage: ``rma-shell [--data DIR] [--exec FILE] [--format table|csv]``

Input is a mix of SQL statements, each terminated by ``;``, and
meta-commands, which start with a backslash and occupy one line::

    \\load name file.csv    \\export name file.csv    \\store name
    \\tables                \\schema name             \\timing on|off
    \\format table|csv      \\help                    \\quit
"""

from __future__ import annotations

import argparse
import csv
import inspect
import shlex
import sys
from pathlib import Path
from typing import TextIO

from .catalog import Catalog
from .columnar import Kind, Relation, render_value
from .engine import Engine
from .errors import RmaError, SqlError

HELP = __doc__.split("::", 1)[1].strip("\n")


def format_cell(value, kind: Kind) -> str:
    if kind is Kind.FLOAT64:
        return format(float(value), "#.4g")
    return render_value(value, kind)


def render_table(r: Relation) -> str:
    header = list(r.names)
    kinds = r.schema.kinds
    body = [[format_cell(v, k) for v, k in zip(row, kinds)] for row in r.rows()]
    widths = [max([len(h)] + [len(row[j]) for row in body]) for j, h in enumerate(header)]

    def line(cells):
        out = []
        for cell, w, k in zip(cells, widths, kinds):
            out.append(cell.rjust(w) if k.is_numeric else cell.ljust(w))
        return " | ".join(out).rstrip()

    lines = [" | ".join(h.ljust(w) for h, w in zip(header, widths)).rstrip(),
             "-+-".join("-" * w for w in widths)]
    lines += [line(row) for row in body]
    n = len(r)
    lines.append(f"({n} row{'' if n == 1 else 's'})")
    return "\n".join(lines)


def render_csv(r: Relation, out: TextIO):
    w = csv.writer(out, lineterminator="\n")
    w.writerow(r.names)
    kinds = r.schema.kinds
    for row in r.rows():
        w.writerow([render_value(v, k) for v, k in zip(row, kinds)])


class CommandError(RmaError):
    pass


def _statement_complete(text: str) -> bool:
    """True when ``text`` ends with a ``;`` outside quotes and comments."""
    quote = None
    last = ""
    i = 0
    while i < len(text):
        ch = text[i]
        if quote:
            if ch == quote:
                quote = None
            last = ch
        elif ch in "'\"":
            quote = last = ch
        elif text.startswith("--", i):
            nl = text.find("\n", i)
            i = len(text) if nl < 0 else nl
            continue
        elif not ch.isspace():
            last = ch
        i += 1
    return quote is None and last == ";"


class Shell:
    def __init__(self, engine: Engine | None = None, out: TextIO | None = None, err: TextIO | None = None,
                 fmt: str = "table"):
        self.engine = engine or Engine()
        self.out = out if out is not None else sys.stdout
        self.err = err if err is not None else sys.stderr
        self.format = fmt
        self.timing = False
        self.last: Relation | None = None
        self.finished = False
        self.errors = 0
        self._buffer: list[str] = []

    # -- input handling ---------------------------------------------------------

    def feed_line(self, line: str):
        """Consume one input line; statements run once their ``;`` arrives."""
        stripped = line.strip()
        if not self._buffer and stripped.startswith("\\"):
            self.run_command(stripped)
            return
        if not self._buffer and (not stripped or stripped.startswith("--")):
            return
        self._buffer.append(line)
        text = "\n".join(self._buffer)
        if _statement_complete(text):
            self._buffer = []
            self.run_statement(text)

    def feed(self, text: str):
        for line in text.splitlines():
            if self.finished:
                break
            self.feed_line(line)

    def flush(self):
        """Run a trailing statement that lacks its terminating ``;``."""
        if self._buffer:
            text = "\n".join(self._buffer)
            self._buffer = []
            self.run_statement(text)

    @property
    def pending(self) -> bool:
        return bool(self._buffer)

    # -- statements -----------------------------------------------------------------

    def _fail(self, message: str):
        self.errors += 1
        print(message, file=self.err)

    def run_statement(self, text: str) -> bool:
        try:
            result = self.engine.run(text)
        except SqlError as e:
            self._fail(e.format())
            return False
        except RmaError as e:
            self._fail(f"ERROR execute: {type(e).__name__}: {e}")
            return False
        self.last = result.relation
        self.show(result.relation)
        if self.timing:
            t = result.timings
            print(f"Time: parse {t.parse_ms:.3f} ms, plan {t.plan_ms:.3f} ms, "
                  f"execute {t.execute_ms:.3f} ms, total {t.total_ms:.3f} ms", file=self.out)
        return True

    def show(self, r: Relation):
        if self.format == "csv":
            render_csv(r, self.out)
        else:
            print(render_table(r), file=self.out)

    # -- meta-commands --------------------------------------------------------------

    def run_command(self, line: str) -> bool:
        try:
            words = shlex.split(line[1:])
        except ValueError as e:
            self._fail(f"ERROR command: {e}")
            return False
        if not words:
            self._fail("ERROR command: empty command")
            return False
        name, args = words[0], words[1:]
        handler = getattr(self, f"_cmd_{name}", None)
        if handler is None:
            self._fail(f"ERROR command: unknown command \\{name} (try \\help)")
            return False
        try:
            inspect.signature(handler).bind(*args)
        except TypeError:
            self._fail(f"ERROR command: wrong number of arguments for \\{name}")
            return False
        try:
            handler(*args)
        except (RmaError, OSError) as e:
            self._fail(f"ERROR command: {e}")
            return False
        return True

    def _cmd_load(self, name, path):
        r = self.engine.catalog.load_csv(name, path)
        print(f"loaded {name}: {len(r)} rows, {len(r.schema)} attributes", file=self.out)

    def _cmd_export(self, name, path):
        if name not in self.engine.catalog:
            raise CommandError(f"unknown table {name}")
        self.engine.catalog.export_csv(name, path)
        print(f"exported {name} to {path}", file=self.out)

    def _cmd_store(self, name):
        if self.last is None:
            raise CommandError("no query result to store")
        self.engine.register(name, self.last)
        print(f"stored {name}: {len(self.last)} rows", file=self.out)

    def _cmd_tables(self):
        for name in self.engine.catalog.names():
            print(name, file=self.out)

    def _cmd_schema(self, name):
        if name not in self.engine.catalog:
            raise CommandError(f"unknown table {name}")
        r = self.engine.catalog.get(name)
        for attr in r.schema:
            print(f"{attr.name} {attr.kind.value}", file=self.out)

    def _cmd_timing(self, mode):
        if mode not in ("on", "off"):
            raise CommandError("usage: \\timing on|off")
        self.timing = mode == "on"

    def _cmd_format(self, mode):
        if mode not in ("table", "csv"):
            raise CommandError("usage: \\format table|csv")
        self.format = mode

    def _cmd_help(self):
        print(HELP, file=self.out)

    def _cmd_quit(self):
        self.finished = True

    _cmd_q = _cmd_quit


def run_script(shell: Shell, path: str | Path) -> int:
    text = Path(path).read_text(encoding="utf-8")
    shell.feed(text)
    if not shell.finished:
        shell.flush()
    return 1 if shell.errors else 0


def repl(shell: Shell, stdin: TextIO | None = None) -> int:
    stdin = stdin if stdin is not None else sys.stdin
    interactive = stdin.isatty()
    while not shell.finished:
        if interactive:
            print("...> " if shell.pending else "rma> ", end="", file=shell.out, flush=True)
        line = stdin.readline()
        if not line:
            break
        shell.feed_line(line.rstrip("\n"))
    if not shell.finished:
        shell.flush()
    # piped input is a script; an interactive session has already shown its errors
    return 1 if shell.errors and not interactive else 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rma-shell", description="SQL shell with relational matrix operations")
    p.add_argument("--data", metavar="DIR", help="catalog directory; tables persist there")
    p.add_argument("--exec", metavar="FILE", dest="script", help="run a script and exit")
    p.add_argument("--format", choices=("table", "csv"), default="table", help="result display format")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        catalog = Catalog(args.data)
    except RmaError as e:
        print(f"ERROR catalog: {e}", file=sys.stderr)
        return 2
    shell = Shell(Engine(catalog), fmt=args.format)
    if args.script:
        try:
            return run_script(shell, args.script)
        except OSError as e:
            print(f"ERROR: cannot read script: {e}", file=sys.stderr)
            return 2
    return repl(shell)


if __name__ == "__main__":
    sys.exit(main())
