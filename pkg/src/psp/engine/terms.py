"""Prolog terms, substitutions and unification.

A substitution is a plain ``dict`` mapping variable ids to terms.  The solver
mutates one in place and records bound ids on a trail so bindings can be
undone on backtracking; the public :func:`unify` works on a copy.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Union

INT_MIN = -(2**63)
INT_MAX = 2**63 - 1

_var_ids = itertools.count(1)


@dataclass(frozen=True, slots=True)
class Atom:
    name: str

    def __repr__(self) -> str:
        return f"Atom({self.name!r})"


@dataclass(frozen=True, slots=True)
class Var:
    name: str
    id: int

    def __repr__(self) -> str:
        return f"Var({self.name!r}, {self.id})"


@dataclass(frozen=True, slots=True)
class Int:
    value: int

    def __post_init__(self):
        if not INT_MIN <= self.value <= INT_MAX:
            raise OverflowError(f"integer {self.value} outside signed 64-bit range")


@dataclass(frozen=True, slots=True)
class Float:
    value: float


@dataclass(frozen=True, slots=True)
class Compound:
    functor: str
    args: tuple

    def __post_init__(self):
        if not self.args:
            raise ValueError("compound terms need at least one argument; use Atom")

    @property
    def arity(self) -> int:
        return len(self.args)


Term = Union[Atom, Var, Int, Float, Compound]
Substitution = dict

NIL = Atom("[]")
TRUE = Atom("true")
EMPTY = Atom("")


def fresh_var(name: str = "_") -> Var:
    return Var(name, next(_var_ids))


def compound(functor: str, *args: Term) -> Term:
    """Build ``functor(args...)``, or a bare atom when there are no args."""
    return Compound(functor, tuple(args)) if args else Atom(functor)


def make_list(items, tail: Term = NIL) -> Term:
    result = tail
    for item in reversed(list(items)):
        result = Compound(".", (item, result))
    return result


def is_callable(t: Term) -> bool:
    return isinstance(t, (Atom, Compound))


def key_of(t: Term) -> tuple[str, int]:
    if isinstance(t, Atom):
        return (t.name, 0)
    return (t.functor, len(t.args))


def deref(t: Term, s: Substitution) -> Term:
    while type(t) is Var:
        bound = s.get(t.id)
        if bound is None:
            return t
        t = bound
    return t


def resolve(t: Term, s: Substitution) -> Term:
    """Apply ``s`` to ``t`` all the way down."""
    t = deref(t, s)
    if type(t) is Compound:
        return Compound(t.functor, tuple(resolve(a, s) for a in t.args))
    return t


def term_vars(t: Term, s: Substitution | None = None) -> list[Var]:
    """Distinct unbound variables of ``t`` in depth-first, left-to-right order."""
    s = s or {}
    seen: dict[int, Var] = {}
    stack = [t]
    while stack:
        t = deref(stack.pop(), s)
        if type(t) is Var:
            seen.setdefault(t.id, t)
        elif type(t) is Compound:
            stack.extend(reversed(t.args))
    return list(seen.values())


def occurs(var_id: int, t: Term, s: Substitution) -> bool:
    stack = [t]
    while stack:
        t = deref(stack.pop(), s)
        if type(t) is Var:
            if t.id == var_id:
                return True
        elif type(t) is Compound:
            stack.extend(t.args)
    return False


def bind_unify(a: Term, b: Term, s: Substitution, trail: list, occurs_check: bool = True) -> bool:
    """Unify in place, appending every newly bound id to ``trail``.

    On failure some bindings may already have been made; the caller undoes
    them by truncating back to its trail mark.
    """
    stack = [(a, b)]
    while stack:
        a, b = stack.pop()
        a = deref(a, s)
        b = deref(b, s)
        if a is b:
            continue
        ta, tb = type(a), type(b)
        if ta is Var:
            if tb is Var:
                if a.id == b.id:
                    continue
                # bind the younger variable to the older one
                if a.id < b.id:
                    a, b = b, a
                s[a.id] = b
                trail.append(a.id)
                continue
            if occurs_check and tb is Compound and occurs(a.id, b, s):
                return False
            s[a.id] = b
            trail.append(a.id)
        elif tb is Var:
            if occurs_check and ta is Compound and occurs(b.id, a, s):
                return False
            s[b.id] = a
            trail.append(b.id)
        elif ta is Compound:
            if tb is not Compound or a.functor != b.functor or len(a.args) != len(b.args):
                return False
            stack.extend(zip(a.args, b.args))
        elif ta is not tb or a != b:
            return False
    return True


def unify(t1: Term, t2: Term, s: Substitution | None = None, occurs_check: bool = True) -> Substitution | None:
    """Return the most general extension of ``s`` unifying ``t1`` and ``t2``, or None."""
    extended = dict(s or {})
    if bind_unify(t1, t2, extended, [], occurs_check):
        return extended
    return None


def undo(s: Substitution, trail: list, mark: int) -> None:
    while len(trail) > mark:
        del s[trail.pop()]


def identical(a: Term, b: Term, s: Substitution) -> bool:
    """Structural identity (``==``): no bindings are made."""
    stack = [(a, b)]
    while stack:
        a, b = stack.pop()
        a = deref(a, s)
        b = deref(b, s)
        if a is b:
            continue
        if type(a) is not type(b):
            return False
        if type(a) is Compound:
            if a.functor != b.functor or len(a.args) != len(b.args):
                return False
            stack.extend(zip(a.args, b.args))
        elif a != b:
            return False
    return True


def rename(t: Term, mapping: dict) -> Term:
    """Copy ``t`` replacing each variable by a fresh one (shared via ``mapping``)."""
    tt = type(t)
    if tt is Var:
        v = mapping.get(t.id)
        if v is None:
            v = mapping[t.id] = Var(t.name, next(_var_ids))
        return v
    if tt is Compound:
        return Compound(t.functor, tuple([rename(a, mapping) for a in t.args]))
    return t


def has_binding_cycle(s: Substitution) -> bool:
    """True if dereferencing some binding in ``s`` leads back to the same variable."""
    return any(_reaches(t, {vid}, s) for vid, t in s.items())


def _reaches(t: Term, path: set, s: Substitution) -> bool:
    if type(t) is Var:
        if t.id in path:
            return True
        if t.id not in s:
            return False
        return _reaches(s[t.id], path | {t.id}, s)
    if type(t) is Compound:
        return any(_reaches(a, path, s) for a in t.args)
    return False
