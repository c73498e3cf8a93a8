"""Tokenizer for the SQL subset."""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import SqlSyntaxError

KEYWORDS = frozenset({
    "SELECT", "FROM", "WHERE", "GROUP", "BY", "ORDER", "AS", "JOIN", "INNER",
    "CROSS", "ON", "AND", "OR", "NOT", "NAMED", "TRUE", "FALSE", "ASC", "DESC",
})

SYMBOLS = ("<>", "<=", ">=", "!=", "(", ")", ",", ";", "*", "+", "-", "/", "=", "<", ">", ".")


@dataclass(frozen=True)
class Token:
    type: str  # KEYWORD, IDENT, NUMBER, STRING, SYMBOL, EOF
    value: str
    line: int
    col: int
    quoted: bool = False

    def describe(self) -> str:
        if self.type == "EOF":
            return "end of input"
        if self.type == "STRING":
            return f"string '{self.value}'"
        return repr(self.value)


def tokenize(text: str) -> list[Token]:
    tokens = []
    i, line, col = 0, 1, 1
    n = len(text)

    def advance(k):
        nonlocal i, line, col
        for ch in text[i:i + k]:
            if ch == "\n":
                line += 1
                col = 1
            else:
                col += 1
        i += k

    while i < n:
        ch = text[i]
        if ch.isspace():
            advance(1)
            continue
        if text.startswith("--", i):
            end = text.find("\n", i)
            advance((end if end >= 0 else n) - i)
            continue
        start_line, start_col = line, col
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            if word.upper() in KEYWORDS:
                tokens.append(Token("KEYWORD", word.upper(), start_line, start_col))
            else:
                tokens.append(Token("IDENT", word, start_line, start_col))
            advance(j - i)
            continue
        if ch.isdigit() or (ch == "." and i + 1 < n and text[i + 1].isdigit()):
            j = i
            while j < n and text[j].isdigit():
                j += 1
            if j < n and text[j] == "." and not (j + 1 < n and text[j + 1] == "."):
                j += 1
                while j < n and text[j].isdigit():
                    j += 1
            if j < n and text[j] in "eE":
                k = j + 1
                if k < n and text[k] in "+-":
                    k += 1
                if k < n and text[k].isdigit():
                    while k < n and text[k].isdigit():
                        k += 1
                    j = k
            tokens.append(Token("NUMBER", text[i:j], start_line, start_col))
            advance(j - i)
            continue
        if ch in "'\"":
            quote = ch
            j = i + 1
            buf = []
            while True:
                if j >= n:
                    what = "string literal" if quote == "'" else "quoted identifier"
                    raise SqlSyntaxError(f"unterminated {what}", start_line, start_col)
                if text[j] == quote:
                    if j + 1 < n and text[j + 1] == quote:
                        buf.append(quote)
                        j += 2
                        continue
                    break
                buf.append(text[j])
                j += 1
            value = "".join(buf)
            if quote == "'":
                tokens.append(Token("STRING", value, start_line, start_col))
            else:
                if not value:
                    raise SqlSyntaxError("empty quoted identifier", start_line, start_col)
                tokens.append(Token("IDENT", value, start_line, start_col, quoted=True))
            advance(j + 1 - i)
            continue
        for sym in SYMBOLS:
            if text.startswith(sym, i):
                tokens.append(Token("SYMBOL", "<>" if sym == "!=" else sym, start_line, start_col))
                advance(len(sym))
                break
        else:
            raise SqlSyntaxError(f"unexpected character {ch!r}", start_line, start_col)
    tokens.append(Token("EOF", "", line, col))
    return tokens
