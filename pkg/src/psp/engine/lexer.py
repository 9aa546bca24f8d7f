"""Tokenizer for the Prolog subset used in PSP chunks."""

from __future__ import annotations

import enum
from dataclasses import dataclass

from ..errors import PrologSyntaxError

SYMBOL_CHARS = frozenset("+-*/\\^<>=~:.?@#&$")
SOLO_CHARS = frozenset("!;")
PUNCT_CHARS = frozenset("()[],|")
LAYOUT = frozenset(" \t\r\n\f\v")


class Kind(enum.Enum):
    ATOM = "atom"
    VAR = "var"
    INT = "int"
    FLOAT = "float"
    PUNCT = "punct"
    QUERY = "?-"
    NECK = ":-"
    OP = "operator"
    END = "end"


@dataclass(frozen=True, slots=True)
class Token:
    kind: Kind
    value: object
    line: int
    column: int
    # True when layout (whitespace/comment) precedes the token
    spaced: bool = True
    # True for quoted atoms, which never act as negative-number signs
    quoted: bool = False

    @property
    def text(self):
        return self.value

    def __repr__(self) -> str:
        return f"{self.kind.name}({self.value!r})@{self.line}:{self.column}"


def is_name_start(c: str) -> bool:
    return c.isalpha() and not (c.isupper() or c.istitle())


def is_var_start(c: str) -> bool:
    return c == "_" or (c.isalpha() and (c.isupper() or c.istitle()))


def is_alnum(c: str) -> bool:
    return c == "_" or c.isalnum()


class _Scanner:
    def __init__(self, source: str):
        self.src = source
        self.pos = 0
        self.line = 1
        self.col = 1

    def peek(self, offset: int = 0) -> str:
        i = self.pos + offset
        return self.src[i] if i < len(self.src) else ""

    def advance(self, n: int = 1) -> str:
        chunk = self.src[self.pos:self.pos + n]
        for ch in chunk:
            if ch == "\n":
                self.line += 1
                self.col = 1
            else:
                self.col += 1
        self.pos += n
        return chunk

    def error(self, message: str, line=None, col=None):
        return PrologSyntaxError(message, line or self.line, col or self.col)


def tokenize(source: str) -> list[Token]:
    """Split ``source`` into tokens, dropping layout and comments."""
    sc = _Scanner(source)
    tokens: list[Token] = []
    spaced = True
    while True:
        c = sc.peek()
        if not c:
            return tokens
        if c in LAYOUT:
            sc.advance()
            spaced = True
            continue
        if c == "%":
            while sc.peek() and sc.peek() != "\n":
                sc.advance()
            spaced = True
            continue
        if c == "/" and sc.peek(1) == "*":
            line, col = sc.line, sc.col
            end = source.find("*/", sc.pos + 2)
            if end < 0:
                raise sc.error("unterminated block comment", line, col)
            sc.advance(end + 2 - sc.pos)
            spaced = True
            continue
        tokens.append(_next_token(sc, spaced))
        spaced = False


def _next_token(sc: _Scanner, spaced: bool) -> Token:
    line, col = sc.line, sc.col
    c = sc.peek()

    def tok(kind, value, quoted=False):
        return Token(kind, value, line, col, spaced, quoted)

    if c.isdigit() and c.isascii():
        return _number(sc, tok)
    if c == "_" or c.isalpha():
        start = sc.pos
        while sc.peek() and is_alnum(sc.peek()):
            sc.advance()
        name = sc.src[start:sc.pos]
        return tok(Kind.VAR if is_var_start(c) else Kind.ATOM, name)
    if c == "'":
        return tok(Kind.ATOM, _quoted(sc, "'"), quoted=True)
    if c == '"':
        # double-quoted text reads as an atom
        return tok(Kind.ATOM, _quoted(sc, '"'), quoted=True)
    if c in PUNCT_CHARS:
        sc.advance()
        return tok(Kind.PUNCT, c)
    if c in SOLO_CHARS:
        sc.advance()
        return tok(Kind.OP if c == ";" else Kind.ATOM, c)
    if c == "." and (sc.peek(1) == "" or sc.peek(1) in LAYOUT or sc.peek(1) == "%"):
        sc.advance()
        return tok(Kind.END, ".")
    if c in SYMBOL_CHARS:
        start = sc.pos
        while sc.peek() in SYMBOL_CHARS and sc.peek():
            sc.advance()
        name = sc.src[start:sc.pos]
        if name == "?-":
            return tok(Kind.QUERY, name)
        if name == ":-":
            return tok(Kind.NECK, name)
        return tok(Kind.OP, name)
    raise sc.error(f"invalid character {c!r}")


def _number(sc: _Scanner, tok) -> Token:
    start = sc.pos
    while sc.peek().isdigit() and sc.peek().isascii():
        sc.advance()
    is_float = False
    if sc.peek() == "." and sc.peek(1).isdigit() and sc.peek(1).isascii():
        is_float = True
        sc.advance()
        while sc.peek().isdigit() and sc.peek().isascii():
            sc.advance()
    if sc.peek() in ("e", "E"):
        # exponent only when followed by digits, optionally signed
        j = 1
        if sc.peek(1) in ("+", "-"):
            j = 2
        if sc.peek(j).isdigit() and sc.peek(j).isascii():
            is_float = True
            sc.advance(j)
            while sc.peek().isdigit() and sc.peek().isascii():
                sc.advance()
    text = sc.src[start:sc.pos]
    if is_float:
        return tok(Kind.FLOAT, float(text))
    return tok(Kind.INT, int(text))


def _quoted(sc: _Scanner, quote: str) -> str:
    line, col = sc.line, sc.col
    sc.advance()
    parts = []
    while True:
        c = sc.peek()
        if not c:
            raise sc.error("unterminated quoted atom", line, col)
        sc.advance()
        if c == quote:
            if sc.peek() == quote:
                sc.advance()
                parts.append(quote)
                continue
            return "".join(parts)
        parts.append(c)
