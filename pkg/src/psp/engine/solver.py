"""Depth-first SLD resolution with an explicit goal and choicepoint stack.

Goals are kept as a linked continuation ``(goal, rest)``; choicepoints record
the trail length so that bindings made after them can be undone.  Nothing
recurses on the Python stack, so deep or endless derivations are bounded only
by the step budget.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import BudgetExceeded, EngineError
from .arith import compare, eval_arith, to_term
from .database import Clause, Database
from .terms import (
    TRUE,
    Atom,
    Compound,
    Float,
    Int,
    Term,
    Var,
    bind_unify,
    deref,
    identical,
    rename,
    resolve,
    undo,
)
from .writer import format_term

DEFAULT_STEP_LIMIT = 1_000_000


_FAIL = Atom("fail")

# choicepoint kinds
_ALT, _CLAUSES, _GEN = 0, 1, 2

_AND, _OR, _IF, _NOT, _CALL, _TRUE, _FAILC = range(7)
_CONTROL_CODES = {
    (",", 2): _AND,
    (";", 2): _OR,
    ("->", 2): _IF,
    ("\\+", 1): _NOT,
    ("call", 1): _CALL,
    ("true", 0): _TRUE,
    ("fail", 0): _FAILC,
}


@dataclass(frozen=True, slots=True)
class _Cut:
    """Continuation marker dropping every choicepoint above ``height``."""

    height: int


@dataclass
class Success:
    bindings: dict
    variables: dict = field(default_factory=dict)

    def value(self, name: str) -> Term:
        return resolve(self.variables[name], self.bindings)

    def answers(self) -> dict[str, Term]:
        return {name: resolve(v, self.bindings) for name, v in self.variables.items() if not name.startswith("_")}


def indicator(name: str, arity: int) -> Term:
    return Compound("/", (Atom(name), Int(arity)))


class Engine:
    """One solving session: a database, an output sink and a step budget.

    An engine is confined to one thread at a time; the base layer of its
    database may be shared.
    """

    def __init__(
        self,
        db: Database | None = None,
        sink=None,
        step_limit: int = DEFAULT_STEP_LIMIT,
        occurs_check: bool = True,
        builtins: dict | None = None,
    ):
        if step_limit <= 0:
            raise ValueError("step_limit must be positive")
        self.db = db if db is not None else Database()
        self.sink = sink
        self.step_limit = step_limit
        self.budget = step_limit
        self.occurs_check = occurs_check
        self.output_started = False
        self.builtins = dict(BUILTINS)
        if builtins:
            self.builtins.update(builtins)
        self.bindings: dict = {}
        self.trail: list = []

    # output

    def emit(self, text: str) -> None:
        if not text:
            return
        self.output_started = True
        if self.sink is not None:
            self.sink.write(text)

    # database

    def is_builtin(self, key) -> bool:
        return key in _CONTROL_CODES or key in self.builtins

    def _split_clause(self, term: Term) -> tuple[Term, Term]:
        term = deref(term, self.bindings)
        if type(term) is Compound and term.functor == ":-" and len(term.args) == 2:
            head, body = term.args
        else:
            head, body = term, TRUE
        head = deref(head, self.bindings)
        if type(head) is Var:
            raise EngineError("instantiation", head, "clause head is unbound")
        if type(head) not in (Atom, Compound):
            raise EngineError("type", head, "clause head is not callable")
        key = (head.name, 0) if type(head) is Atom else (head.functor, len(head.args))
        if self.is_builtin(key):
            raise EngineError("type", indicator(*key), "cannot modify a builtin predicate")
        return head, body

    def assert_clause(self, term: Term, front: bool = False) -> None:
        head, body = self._split_clause(term)
        body = resolve(body, self.bindings)
        if type(body) in (Int, Float):
            raise EngineError("type", body, "clause body is not callable")
        self.db.add(Clause.build(resolve(head, self.bindings), body), front=front)

    # solving

    def _tick(self) -> None:
        if self.budget <= 0:
            raise BudgetExceeded("step budget exhausted")
        self.budget -= 1

    def solve(self, goal: Term, variables: dict | None = None) -> Success | None:
        """Run ``goal`` to its first solution.

        Returns a :class:`Success` or None on failure.  Raises
        :class:`EngineError` or :class:`BudgetExceeded`.  Output written along
        failed branches stays in the sink.
        """
        self.bindings = {}
        self.trail = []
        if self._run(goal):
            return Success(dict(self.bindings), dict(variables or {}))
        return None

    def _run(self, goal: Term) -> bool:
        s = self.bindings
        trail = self.trail
        builtins = self.builtins
        lookup = self.db.lookup
        try_clauses = self._try_clauses
        cps: list = []
        cont = (goal, None)

        while True:
            if cont is None:
                return True
            goal, cont = cont
            if type(goal) is _Cut:
                del cps[goal.height:]
                continue
            if self.budget <= 0:
                raise BudgetExceeded("step budget exhausted")
            self.budget -= 1
            tg = type(goal)
            if tg is Var:
                goal = deref(goal, s)
                tg = type(goal)
            if tg is Compound:
                name, args = goal.functor, goal.args
                key = (name, len(args))
            elif tg is Atom:
                name, args = goal.name, ()
                key = (name, 0)
            elif tg is Var:
                raise EngineError("instantiation", goal, "goal is unbound")
            else:
                raise EngineError("type", goal, "goal is not callable")

            control = _CONTROL_CODES.get(key)
            if control is not None:
                if control == _AND:
                    cont = (args[0], (args[1], cont))
                    continue
                if control == _TRUE:
                    continue
                if control == _OR:
                    lhs = deref(args[0], s)
                    height = len(cps)
                    cps.append((_ALT, len(trail), (args[1], cont)))
                    if type(lhs) is Compound and lhs.functor == "->" and len(lhs.args) == 2:
                        cont = (lhs.args[0], (_Cut(height), (lhs.args[1], cont)))
                    else:
                        cont = (lhs, cont)
                    continue
                if control == _IF:
                    cont = (args[0], (_Cut(len(cps)), (args[1], cont)))
                    continue
                if control == _NOT:
                    height = len(cps)
                    cps.append((_ALT, len(trail), cont))
                    cont = (args[0], (_Cut(height), (_FAIL, None)))
                    continue
                if control == _CALL:
                    cont = (args[0], cont)
                    continue
                ok = False
            else:
                builtin = builtins.get(key)
                if builtin is not None:
                    mark = len(trail)
                    result = builtin(self, *args)
                    if result is True:
                        continue
                    ok = False
                    if result is not False and result is not None:
                        if next(result, False):
                            cps.append((_GEN, mark, result, cont))
                            continue
                        undo(s, trail, mark)
                else:
                    clauses = lookup(key)
                    if clauses is None:
                        raise EngineError("existence", indicator(*key), "unknown procedure")
                    nxt = try_clauses(goal, clauses, 0, cont, cps)
                    if nxt is not False:
                        cont = nxt
                        continue
                    ok = False

            # backtrack
            while not ok:
                if not cps:
                    return False
                cp = cps.pop()
                undo(s, trail, cp[1])
                kind = cp[0]
                if kind == _ALT:
                    cont = cp[2]
                    ok = True
                    continue
                self._tick()
                if kind == _CLAUSES:
                    _, _, g, clauses, index, saved = cp
                    nxt = try_clauses(g, clauses, index, saved, cps)
                    if nxt is not False:
                        cont = nxt
                        ok = True
                else:
                    _, mark, gen, saved = cp
                    if next(gen, False):
                        cps.append(cp)
                        cont = saved
                        ok = True
                    else:
                        undo(s, trail, mark)

    def _try_clauses(self, goal: Term, clauses: tuple, start: int, cont, cps: list):
        """Resolve ``goal`` against ``clauses[start:]``; False when none match."""
        s = self.bindings
        trail = self.trail
        mark = len(trail)
        first = None
        if type(goal) is Compound:
            first = deref(goal.args[0], s)
            if type(first) not in (Atom, Int, Float):
                first = None
        count = len(clauses)
        for i in range(start, count):
            clause = clauses[i]
            if first is not None and clause.first is not None and clause.first != first:
                continue
            if clause.ground:
                body = clause.body
                matched = type(goal) is Atom or bind_unify(clause.head, goal, s, trail, self.occurs_check)
            else:
                mapping: dict = {}
                head = rename(clause.head, mapping)
                matched = bind_unify(head, goal, s, trail, self.occurs_check)
                if matched:
                    body = rename(clause.body, mapping)
            if matched:
                if i + 1 < count:
                    cps.append((_CLAUSES, mark, goal, clauses, i + 1, cont))
                if body is TRUE or (type(body) is Atom and body.name == "true"):
                    return cont
                return (body, cont)
            undo(s, trail, mark)
        return False


def solve(
    goal: Term,
    db: Database,
    budget: int = DEFAULT_STEP_LIMIT,
    sink=None,
    occurs_check: bool = True,
) -> Success | None:
    """Convenience wrapper running one goal in a throwaway :class:`Engine`."""
    return Engine(db, sink=sink, step_limit=budget, occurs_check=occurs_check).solve(goal)


# builtins: callables (engine, *args) -> bool or a generator of bools


def _unify(e: Engine, a, b):
    return bind_unify(a, b, e.bindings, e.trail, e.occurs_check)


def _not_unify(e: Engine, a, b):
    mark = len(e.trail)
    ok = bind_unify(a, b, e.bindings, e.trail, e.occurs_check)
    undo(e.bindings, e.trail, mark)
    return not ok


def _is(e: Engine, result, expr):
    value = eval_arith(expr, e.bindings)
    return bind_unify(result, to_term(value), e.bindings, e.trail, e.occurs_check)


def _comparison(op):
    def builtin(e: Engine, a, b):
        return compare(op, eval_arith(a, e.bindings), eval_arith(b, e.bindings))

    builtin.__name__ = f"_compare_{op}"
    return builtin


def _type_check(*types):
    def builtin(e: Engine, t):
        return type(deref(t, e.bindings)) in types

    return builtin


def _write(e: Engine, t):
    e.emit(format_term(t, quoted=False, bindings=e.bindings))
    return True


def _nl(e: Engine):
    e.emit("\n")
    return True


def _assertz(e: Engine, t):
    e.assert_clause(t, front=False)
    return True


def _asserta(e: Engine, t):
    e.assert_clause(t, front=True)
    return True


def _retract(e: Engine, t):
    head, body = e._split_clause(t)
    db = e.db
    candidates = db.request_clauses((head.name, 0) if type(head) is Atom else (head.functor, len(head.args)))

    def attempts():
        s, trail = e.bindings, e.trail
        for clause in candidates:
            mark = len(trail)
            mapping: dict = {}
            if (
                bind_unify(head, rename(clause.head, mapping), s, trail, e.occurs_check)
                and bind_unify(body, rename(clause.body, mapping), s, trail, e.occurs_check)
                and db.remove(clause)
            ):
                yield True
            undo(s, trail, mark)

    return attempts()


BUILTINS = {
    ("=", 2): _unify,
    ("\\=", 2): _not_unify,
    ("==", 2): lambda e, a, b: identical(a, b, e.bindings),
    ("\\==", 2): lambda e, a, b: not identical(a, b, e.bindings),
    ("is", 2): _is,
    **{(op, 2): _comparison(op) for op in ("<", ">", "=<", ">=", "=:=", "=\\=")},
    ("var", 1): _type_check(Var),
    ("nonvar", 1): _type_check(Atom, Compound, Int, Float),
    ("atom", 1): _type_check(Atom),
    ("number", 1): _type_check(Int, Float),
    ("write", 1): _write,
    ("nl", 0): _nl,
    ("assert", 1): _assertz,
    ("assertz", 1): _assertz,
    ("asserta", 1): _asserta,
    ("retract", 1): _retract,
}
