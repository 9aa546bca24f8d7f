"""Arithmetic evaluation for is/2 and the comparison builtins."""

from __future__ import annotations

import math

from ..errors import EngineError
from .terms import INT_MAX, INT_MIN, Compound, Float, Int, Substitution, Term, Var, deref, resolve


def _int(value: int, culprit: Term) -> int:
    if not INT_MIN <= value <= INT_MAX:
        raise EngineError("overflow", culprit, "integer result outside 64-bit range")
    return value


def _float(value: float, culprit: Term) -> float:
    if math.isinf(value) or math.isnan(value):
        raise EngineError("overflow", culprit, "float result is not finite")
    return value


def _require_int(x, culprit: Term) -> int:
    if type(x) is not int:
        raise EngineError("type", culprit, "integer expected")
    return x


def _trunc_div(a: int, b: int) -> int:
    q = abs(a) // abs(b)
    return q if (a >= 0) == (b >= 0) else -q


def _divide(a, b, culprit):
    if b == 0:
        raise EngineError("arithmetic", culprit, "division by zero")
    if type(a) is int and type(b) is int:
        if a % b == 0:
            return _int(a // b, culprit)
        return _float(a / b, culprit)
    return _float(a / b, culprit)


def _binary(op: str, a, b, culprit: Term):
    if op in ("+", "-", "*", "min", "max") and type(a) is not type(b):
        a, b = float(a), float(b)
    if op == "+":
        r = a + b
    elif op == "-":
        r = a - b
    elif op == "*":
        r = a * b
    elif op == "/":
        return _divide(a, b, culprit)
    elif op == "//":
        _require_int(a, culprit)
        _require_int(b, culprit)
        if b == 0:
            raise EngineError("arithmetic", culprit, "division by zero")
        r = _trunc_div(a, b)
    elif op == "mod":
        _require_int(a, culprit)
        _require_int(b, culprit)
        if b == 0:
            raise EngineError("arithmetic", culprit, "division by zero")
        r = a % b
    elif op == "min":
        r = b if b < a else a
    else:
        r = b if b > a else a
    return _int(r, culprit) if type(r) is int else _float(r, culprit)


BINARY = frozenset(["+", "-", "*", "/", "//", "mod", "min", "max"])
UNARY = frozenset(["-", "abs"])


def _eval(t: Term, s: Substitution):
    t = deref(t, s)
    tt = type(t)
    if tt is Int:
        return t.value
    if tt is Float:
        return t.value
    if tt is Var:
        raise EngineError("instantiation", t, "unbound variable in arithmetic")
    if tt is Compound:
        n = len(t.args)
        if n == 2 and t.functor in BINARY:
            a = _eval(t.args[0], s)
            b = _eval(t.args[1], s)
            return _binary(t.functor, a, b, resolve(t, s))
        if n == 1 and t.functor in UNARY:
            a = _eval(t.args[0], s)
            r = -a if t.functor == "-" else abs(a)
            return _int(r, resolve(t, s)) if type(r) is int else r
        raise EngineError("type", resolve(t, s), f"{t.functor}/{n} is not an arithmetic function")
    raise EngineError("type", t, "not evaluable")


def eval_arith(expr: Term, s: Substitution | None = None) -> int | float:
    """Evaluate ``expr`` under ``s``; returns a Python int or float."""
    return _eval(expr, s or {})


def to_term(value: int | float) -> Term:
    return Int(value) if type(value) is int else Float(value)


def compare(op: str, a, b) -> bool:
    if op == "<":
        return a < b
    if op == ">":
        return a > b
    if op == "=<":
        return a <= b
    if op == ">=":
        return a >= b
    if op == "=:=":
        return a == b
    return a != b

