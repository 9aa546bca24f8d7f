"""Layered clause store: an immutable shared base plus a per-request layer."""

from __future__ import annotations

from dataclasses import dataclass
from types import MappingProxyType

from .terms import TRUE, Atom, Compound, Float, Int, Term, key_of, term_vars

Key = tuple[str, int]


@dataclass(frozen=True, eq=False)
class Clause:
    head: Term
    body: Term = TRUE
    # no variables: the clause can be used without renaming
    ground: bool = False
    # atomic first argument of the head, used to skip clauses cheaply
    first: Term | None = None

    @classmethod
    def build(cls, head: Term, body: Term = TRUE) -> "Clause":
        ground = not term_vars(head) and not term_vars(body)
        first = None
        if isinstance(head, Compound) and isinstance(head.args[0], (Atom, Int, Float)):
            first = head.args[0]
        return cls(head, body, ground, first)

    @property
    def key(self) -> Key:
        return key_of(self.head)


class Database:
    """Clauses keyed by (name, arity).

    Lookups see request-layer clauses first, then base-layer clauses, each
    in assertion order.  The base layer is shared between forks and is never
    modified through this class.
    """

    def __init__(self, base=None, base_keys=frozenset()):
        self._base = base if base is not None else MappingProxyType({})
        self._base_keys = frozenset(base_keys) | frozenset(self._base)
        self._request: dict[Key, list[Clause]] = {}
        self._dynamic: set[Key] = set()
        self._combined: dict[Key, tuple] = {}

    def fork(self) -> "Database":
        """A fresh database sharing this one's base layer, with an empty request layer."""
        return Database(self._base, self._base_keys)

    def freeze(self) -> "Database":
        """Collapse both layers into the base of a new, read-only-base database."""
        merged = {}
        for key in set(self._base) | set(self._request):
            merged[key] = tuple(self._request.get(key, ())) + tuple(self._base.get(key, ()))
        return Database(MappingProxyType(merged), self._base_keys | self._dynamic | set(merged))

    def declare_dynamic(self, key: Key) -> None:
        self._dynamic.add(key)

    def is_defined(self, key: Key) -> bool:
        return key in self._request or key in self._dynamic or key in self._base_keys

    def lookup(self, key: Key) -> tuple | None:
        """Snapshot of the clauses for ``key``, or None if the predicate is unknown."""
        cached = self._combined.get(key)
        if cached is not None:
            return cached
        if not self.is_defined(key):
            return None
        clauses = tuple(self._request.get(key, ())) + tuple(self._base.get(key, ()))
        self._combined[key] = clauses
        return clauses

    def add(self, clause: Clause, front: bool = False) -> None:
        key = clause.key
        bucket = self._request.setdefault(key, [])
        if front:
            bucket.insert(0, clause)
        else:
            bucket.append(clause)
        self._dynamic.add(key)
        self._combined.pop(key, None)

    def remove(self, clause: Clause) -> bool:
        bucket = self._request.get(clause.key)
        if not bucket:
            return False
        for i, c in enumerate(bucket):
            if c is clause:
                del bucket[i]
                self._combined.pop(clause.key, None)
                return True
        return False

    def request_clauses(self, key: Key) -> tuple:
        return tuple(self._request.get(key, ()))

    def base_clauses(self, key: Key) -> tuple:
        return tuple(self._base.get(key, ()))

    def keys(self) -> set[Key]:
        return set(self._base) | set(self._request)

    def __len__(self) -> int:
        return sum(len(v) for v in self._base.values()) + sum(len(v) for v in self._request.values())

