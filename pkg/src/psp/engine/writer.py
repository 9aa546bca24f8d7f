"""Rendering terms as text, with operators and minimal parentheses."""

from __future__ import annotations

import math
import re

from .lexer import SYMBOL_CHARS
from .operators import INFIX, PREFIX, infix_arg_limits, is_operator, prefix_arg_limit
from .terms import Atom, Compound, Float, Int, Substitution, Term, Var, deref

_PLAIN_ATOM = re.compile(r"[a-z][a-zA-Z0-9_]*\Z")
_SOLO_ATOMS = {"[]", "!", ";"}


def format_term(t: Term, quoted: bool = False, bindings: Substitution | None = None) -> str:
    """Render ``t``; with ``quoted`` the result reads back as the same term."""
    return _Writer(quoted, bindings or {}).write(t, 1200)


def atom_text(name: str, quoted: bool) -> str:
    if not quoted or not _needs_quotes(name):
        return name
    return "'" + name.replace("'", "''") + "'"


def _needs_quotes(name: str) -> bool:
    if _PLAIN_ATOM.match(name) or name in _SOLO_ATOMS:
        return False
    if name and all(c in SYMBOL_CHARS for c in name):
        # `/*` would open a comment and a trailing dot could read as an end token
        return "/*" in name or name.endswith(".")
    return True


def format_float(value: float) -> str:
    if math.isinf(value) or math.isnan(value):
        return repr(value)
    text = repr(value)
    mantissa, _, exponent = text.partition("e")
    if "." not in mantissa:
        mantissa += ".0"
    return f"{mantissa}e{exponent}" if exponent else mantissa


def _glues(left: str, right: str) -> bool:
    """Would ``left`` and ``right`` lex as one token if written back to back?"""
    if not left or not right:
        return False
    a, b = left[-1], right[0]
    if a in SYMBOL_CHARS and b in SYMBOL_CHARS:
        return True
    if (a.isalnum() or a == "_") and (b.isalnum() or b == "_"):
        return True
    if a == "'" and b == "'":
        return True
    # `1` followed by `.5` or `e5` would extend a number
    return a.isdigit() and b == "."


class _Writer:
    def __init__(self, quoted: bool, bindings: Substitution):
        self.quoted = quoted
        self.bindings = bindings

    def write(self, t: Term, max_priority: int, operand: bool = False) -> str:
        t = deref(t, self.bindings)
        if type(t) is Atom:
            text = atom_text(t.name, self.quoted)
            if operand and is_operator(t.name):
                return f"({text})"
            return text
        if type(t) is Var:
            return f"_G{t.id}"
        if type(t) is Int:
            return str(t.value)
        if type(t) is Float:
            return format_float(t.value)
        return self._compound(t, max_priority)

    def _compound(self, t: Compound, max_priority: int) -> str:
        name, args = t.functor, t.args
        if name == "." and len(args) == 2:
            return self._list(t)
        if len(args) == 2 and name in INFIX:
            priority, op_type = INFIX[name]
            left_max, right_max = infix_arg_limits(priority, op_type)
            left = self.write(args[0], left_max, operand=True)
            right = self.write(args[1], right_max, operand=True)
            if name == ",":
                text = f"{left},{right}"
            elif name[0].isalpha():
                text = f"{left} {name} {right}"
            else:
                op = name
                text = left + (" " if _glues(left, op) else "") + op
                text += (" " if _glues(op, right) else "") + right
            return f"({text})" if priority > max_priority else text
        if len(args) == 1 and name in PREFIX:
            return self._prefix(t, max_priority)
        functor = atom_text(name, self.quoted)
        if self.quoted and name == "[]":
            functor = "'[]'"
        inner = ",".join(self.write(a, 999) for a in args)
        return f"{functor}({inner})"

    def _prefix(self, t: Compound, max_priority: int) -> str:
        name, arg = t.functor, deref(t.args[0], self.bindings)
        priority, op_type = PREFIX[name]
        if type(arg) is Atom and is_operator(arg.name):
            # canonical form keeps `-(+)` from reading as an infix expression
            return f"{atom_text(name, self.quoted)}({self.write(arg, 999)})"
        limit = prefix_arg_limit(priority, op_type)
        inner = self.write(arg, limit, operand=True)
        if inner.startswith("("):
            text = f"{name} {inner}"
        elif name == "-" and type(arg) in (Int, Float):
            text = f"- {inner}"
        else:
            text = name + (" " if _glues(name, inner) else "") + inner
        return f"({text})" if priority > max_priority else text

    def _list(self, t: Compound) -> str:
        items = []
        while True:
            items.append(self.write(t.args[0], 999))
            tail = deref(t.args[1], self.bindings)
            if type(tail) is Compound and tail.functor == "." and len(tail.args) == 2:
                t = tail
                continue
            if type(tail) is Atom and tail.name == "[]":
                return "[" + ",".join(items) + "]"
            return "[" + ",".join(items) + "|" + self.write(tail, 999) + "]"
