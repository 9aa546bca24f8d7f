"""Request data as Prolog facts, and the setcookie/6 builtin.

Form controls become ``arg(Name, Value)`` facts and inbound cookies become
``cookie(Name, Value)`` facts, both as atoms and in wire order.
"""

from __future__ import annotations

import logging
import string
from dataclasses import dataclass
from typing import NamedTuple

from .engine.database import Clause, Database
from .engine.terms import Atom, Compound, Var, deref
from .errors import DecodeError, EngineError

log = logging.getLogger(__name__)

_HEX = frozenset(string.hexdigits)


class ControlPair(NamedTuple):
    name: str
    value: str


def percent_decode(text: str, plus_as_space: bool = False) -> str:
    """Decode ``%HH`` escapes (and ``+`` in form mode); the result must be UTF-8."""
    out = bytearray()
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c == "%":
            pair = text[i + 1:i + 3]
            if len(pair) < 2 or not (pair[0] in _HEX and pair[1] in _HEX):
                raise DecodeError(f"invalid percent escape {text[i:i + 3]!r} at offset {i}")
            out.append(int(pair, 16))
            i += 3
            continue
        if c == "+" and plus_as_space:
            out.append(0x20)
        else:
            out += c.encode("utf-8", "surrogatepass")
        i += 1
    try:
        return out.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise DecodeError(f"decoded bytes are not valid UTF-8: {exc.reason}") from None


def decode_form(encoded: str) -> list[ControlPair]:
    """Split a query string or urlencoded body into ordered (name, value) pairs."""
    pairs = []
    if not encoded:
        return pairs
    for index, part in enumerate(encoded.split("&")):
        if not part:
            continue
        name, _, value = part.partition("=")
        try:
            pairs.append(ControlPair(percent_decode(name, True), percent_decode(value, True)))
        except DecodeError as exc:
            raise DecodeError(f"form pair {index}: {exc}") from None
    return pairs


def parse_cookie_header(header: str, diagnostics: list | None = None) -> list[ControlPair]:
    pairs = []
    for fragment in header.split(";"):
        fragment = fragment.strip()
        if not fragment:
            continue
        name, sep, value = fragment.partition("=")
        if not sep:
            message = f"skipping malformed cookie fragment {fragment!r}"
            log.info(message)
            if diagnostics is not None:
                diagnostics.append(message)
            continue
        pairs.append(ControlPair(name.strip(), value.strip()))
    return pairs


ARG_KEY = ("arg", 2)
COOKIE_KEY = ("cookie", 2)


def bind_request_facts(pairs, cookies, db: Database) -> Database:
    """Assert ``arg/2`` for each control and ``cookie/2`` for each cookie."""
    db.declare_dynamic(ARG_KEY)
    db.declare_dynamic(COOKIE_KEY)
    for name, value in pairs:
        db.add(Clause.build(Compound("arg", (Atom(name), Atom(value)))))
    for name, value in cookies:
        db.add(Clause.build(Compound("cookie", (Atom(name), Atom(value)))))
    return db


def _has_control(text: str) -> bool:
    return any(ord(c) < 0x20 or ord(c) == 0x7F for c in text)


@dataclass(frozen=True)
class CookieSpec:
    name: str
    value: str
    expires: str = ""
    domain: str = ""
    path: str = ""
    secure: bool = False

    def problems(self) -> list[tuple[str, str]]:
        """(field, reason) for each violated constraint."""
        found = []
        if not self.name:
            found.append(("name", "cookie name is empty"))
        for field_name in ("name", "value"):
            text = getattr(self, field_name)
            if any(c in text for c in ";,") or any(c.isspace() for c in text) or _has_control(text):
                found.append((field_name, f"cookie {field_name} contains a separator, space or control character"))
        if "=" in self.name:
            found.append(("name", "cookie name contains '='"))
        for field_name in ("expires", "domain", "path"):
            text = getattr(self, field_name)
            if ";" in text or _has_control(text):
                found.append((field_name, f"cookie {field_name} contains ';' or a control character"))
        return found


def format_set_cookie(c: CookieSpec) -> str:
    parts = [f"{c.name}={c.value}"]
    if c.expires:
        parts.append(f"expires={c.expires}")
    if c.domain:
        parts.append(f"domain={c.domain}")
    if c.path:
        parts.append(f"path={c.path}")
    if c.secure:
        parts.append("secure")
    return "; ".join(parts)


_SETCOOKIE_FIELDS = ("name", "value", "expires", "domain", "path", "secure")


def builtin_setcookie(args, session) -> bool:
    """setcookie(+Name, +Value, +Expires, +Domain, +Path, +Secure).

    Queues a Set-Cookie header unless page output has already started, in
    which case the call still succeeds but only leaves a diagnostic.
    """
    bindings = session.engine.bindings
    values = []
    for arg in args:
        arg = deref(arg, bindings)
        if type(arg) is Var:
            raise EngineError("instantiation", arg, "setcookie/6 arguments must be bound")
        if type(arg) is not Atom:
            raise EngineError("type", arg, "setcookie/6 arguments must be atoms")
        values.append(arg)
    if values[5].name not in ("true", "false"):
        raise EngineError("type", values[5], "secure flag must be true or false")
    spec = CookieSpec(*(a.name for a in values[:5]), secure=values[5].name == "true")
    for field_name, reason in spec.problems():
        raise EngineError("type", values[_SETCOOKIE_FIELDS.index(field_name)], reason)
    if session.output_started:
        session.note(f"setcookie({spec.name}) ignored: output already started")
        return True
    session.pending_headers.append(("Set-Cookie", format_set_cookie(spec)))
    return True
