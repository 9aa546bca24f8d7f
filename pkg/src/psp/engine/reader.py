"""Operator-precedence reader turning tokens into terms and program items."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import EngineError, PrologSyntaxError
from .lexer import Kind, Token, tokenize
from .operators import INFIX, PREFIX, infix_arg_limits, prefix_arg_limit
from .terms import NIL, TRUE, Atom, Compound, Float, Int, Term, Var, fresh_var, is_callable

NAME_KINDS = (Kind.ATOM, Kind.OP, Kind.QUERY, Kind.NECK)
CLOSERS = (")", "]", ",", "|")


@dataclass(frozen=True)
class ClauseItem:
    head: Term
    body: Term = TRUE
    line: int = 0
    column: int = 0


@dataclass(frozen=True)
class QueryItem:
    goal: Term
    variables: dict = field(default_factory=dict, compare=False)
    line: int = 0
    column: int = 0


ProgramItem = ClauseItem | QueryItem


class Parser:
    """Reads terms from a token list; one instance per variable scope."""

    def __init__(self, tokens: list[Token], pos: int = 0):
        self.tokens = tokens
        self.pos = pos
        self.varmap: dict[str, Var] = {}

    # token helpers

    def peek(self, offset: int = 0) -> Token | None:
        i = self.pos + offset
        return self.tokens[i] if i < len(self.tokens) else None

    def next(self) -> Token:
        tok = self.peek()
        if tok is None:
            last = self.tokens[-1] if self.tokens else None
            raise PrologSyntaxError("unexpected end of input", last.line if last else 1, last.column if last else 1)
        self.pos += 1
        return tok

    def expect_punct(self, char: str) -> Token:
        tok = self.peek()
        if tok is None or tok.kind is not Kind.PUNCT or tok.value != char:
            raise self._unexpected(tok, f"expected {char!r}")
        return self.next()

    def _unexpected(self, tok: Token | None, detail: str = "") -> PrologSyntaxError:
        if tok is None:
            last = self.tokens[-1] if self.tokens else None
            return PrologSyntaxError(
                f"unexpected end of input{', ' + detail if detail else ''}",
                last.line if last else 1,
                last.column if last else 1,
            )
        what = "end of clause" if tok.kind is Kind.END else repr(tok.value)
        message = f"unexpected {what}"
        if detail:
            message += f", {detail}"
        return PrologSyntaxError(message, tok.line, tok.column)

    # grammar

    def parse(self, max_priority: int = 1200) -> tuple[Term, int]:
        left, left_priority = self.primary(max_priority)
        return self.infix(left, left_priority, max_priority)

    def primary(self, max_priority: int) -> tuple[Term, int]:
        tok = self.next()
        kind = tok.kind
        if kind is Kind.INT:
            return self._int(tok.value, tok), 0
        if kind is Kind.FLOAT:
            return Float(tok.value), 0
        if kind is Kind.VAR:
            return self._variable(tok.value), 0
        if kind is Kind.PUNCT:
            if tok.value == "(":
                inner, _ = self.parse(1200)
                self.expect_punct(")")
                return inner, 0
            if tok.value == "[":
                return self._list(), 0
            raise self._unexpected(tok)
        if kind in NAME_KINDS:
            return self._name(tok, max_priority)
        raise self._unexpected(tok)

    def infix(self, left: Term, left_priority: int, max_priority: int) -> tuple[Term, int]:
        while True:
            tok = self.peek()
            if tok is None:
                break
            if tok.kind is Kind.PUNCT and tok.value == ",":
                name = ","
            elif tok.kind in (Kind.ATOM, Kind.OP, Kind.NECK) and not tok.quoted:
                name = tok.value
            else:
                break
            if name not in INFIX:
                break
            priority, op_type = INFIX[name]
            if priority > max_priority:
                break
            left_max, right_max = infix_arg_limits(priority, op_type)
            if left_priority > left_max:
                raise PrologSyntaxError(f"operator priority clash at {name!r}", tok.line, tok.column)
            self.pos += 1
            right, _ = self.parse(right_max)
            left = Compound(name, (left, right))
            left_priority = priority
        return left, left_priority

    def _name(self, tok: Token, max_priority: int) -> tuple[Term, int]:
        name = tok.value
        nxt = self.peek()
        if nxt is not None and nxt.kind is Kind.PUNCT and nxt.value == "(" and not nxt.spaced:
            self.pos += 1
            args = [self.parse(999)[0]]
            while self._accept_punct(","):
                args.append(self.parse(999)[0])
            self.expect_punct(")")
            return Compound(name, tuple(args)), 0
        if tok.quoted:
            return Atom(name), 0
        if name == "-" and nxt is not None and nxt.kind in (Kind.INT, Kind.FLOAT) and not nxt.spaced:
            self.pos += 1
            if nxt.kind is Kind.INT:
                return self._int(-nxt.value, nxt), 0
            return Float(-nxt.value), 0
        if name in PREFIX and self._starts_operand(nxt):
            priority, op_type = PREFIX[name]
            if priority > max_priority:
                raise PrologSyntaxError(f"operator priority clash at {name!r}", tok.line, tok.column)
            arg, _ = self.parse(prefix_arg_limit(priority, op_type))
            return Compound(name, (arg,)), priority
        return Atom(name), 0

    def _starts_operand(self, tok: Token | None) -> bool:
        if tok is None or tok.kind is Kind.END:
            return False
        if tok.kind is Kind.PUNCT:
            return tok.value in ("(", "[")
        if tok.kind in NAME_KINDS and not tok.quoted:
            # `- = x` reads the minus as an atom operand of `=`
            after = self.peek(1)
            functional = after is not None and after.kind is Kind.PUNCT and after.value == "(" and not after.spaced
            if tok.value in INFIX and tok.value not in PREFIX and not functional:
                return False
        return True

    def _accept_punct(self, char: str) -> bool:
        tok = self.peek()
        if tok is not None and tok.kind is Kind.PUNCT and tok.value == char:
            self.pos += 1
            return True
        return False

    def _list(self) -> Term:
        if self._accept_punct("]"):
            return NIL
        items = [self.parse(999)[0]]
        while self._accept_punct(","):
            items.append(self.parse(999)[0])
        tail = NIL
        if self._accept_punct("|"):
            tail = self.parse(999)[0]
        self.expect_punct("]")
        for item in reversed(items):
            tail = Compound(".", (item, tail))
        return tail

    def _variable(self, name: str) -> Var:
        if name == "_":
            return fresh_var("_")
        var = self.varmap.get(name)
        if var is None:
            var = self.varmap[name] = fresh_var(name)
        return var

    @staticmethod
    def _int(value: int, tok: Token) -> Int:
        try:
            return Int(value)
        except OverflowError:
            raise PrologSyntaxError("integer out of 64-bit range", tok.line, tok.column) from None


def parse_term(tokens: list[Token], max_precedence: int = 1200) -> tuple[Term, list[Token]]:
    """Parse one term from the front of ``tokens``; return it with the unread rest."""
    if not tokens:
        raise PrologSyntaxError("empty token stream", 1, 1)
    parser = Parser(tokens)
    term, _ = parser.parse(max_precedence)
    return term, tokens[parser.pos:]


def read_term(text: str) -> Term:
    """Parse ``text`` as a single term; a trailing end dot is optional."""
    tokens = tokenize(text)
    term, rest = parse_term(tokens)
    if rest and rest[0].kind is Kind.END:
        rest = rest[1:]
    if rest:
        raise PrologSyntaxError(f"unexpected {rest[0].value!r} after term", rest[0].line, rest[0].column)
    return term


class ProgramReader:
    """Cursor over a token stream yielding :class:`ClauseItem` / :class:`QueryItem`."""

    def __init__(self, source: str | list[Token]):
        self.tokens = tokenize(source) if isinstance(source, str) else source
        self.pos = 0

    def __iter__(self):
        while (item := self.read_item()) is not None:
            yield item

    def read_item(self) -> ProgramItem | None:
        if self.pos >= len(self.tokens):
            return None
        start = self.tokens[self.pos]
        nxt = self.tokens[self.pos + 1] if self.pos + 1 < len(self.tokens) else None
        if start.kind in (Kind.QUERY, Kind.NECK) and not start.quoted and nxt is not None and nxt.kind is not Kind.END:
            # a leading `?-` / `:-` is always the query mark, so `?-(A -> B ; C).` works
            parser = Parser(self.tokens, self.pos + 1)
            goal, _ = parser.parse(1199)
            term = Compound(start.value, (goal,))
        else:
            parser = Parser(self.tokens, self.pos)
            term, _ = parser.parse(1200)
        end = parser.peek()
        if end is None or end.kind is not Kind.END:
            raise parser._unexpected(end, "operator expected" if end is not None else "missing end dot")
        self.pos = parser.pos + 1
        return _to_item(term, parser.varmap, start.line, start.column)


def read_program_item(reader: ProgramReader) -> ProgramItem | None:
    return reader.read_item()


def read_program(source: str) -> list[ProgramItem]:
    return list(ProgramReader(source))


def _to_item(term: Term, varmap: dict, line: int, column: int) -> ProgramItem:
    if isinstance(term, Compound) and term.functor in ("?-", ":-") and len(term.args) == 1:
        # `:- Goal.` directives are run like queries
        return QueryItem(term.args[0], dict(varmap), line, column)
    if isinstance(term, Compound) and term.functor == ":-" and len(term.args) == 2:
        head, body = term.args
    else:
        head, body = term, TRUE
    if not is_callable(head):
        raise EngineError("type", head, f"clause head is not callable (line {line})")
    return ClauseItem(head, body, line, column)
