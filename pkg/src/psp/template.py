"""PSP documents: HTML with Prolog chunks between ``<?psp`` and ``?>``.

Each chunk is read as a sequence of clauses and ``?-`` queries.  Clauses are
asserted as soon as they are read; each query runs once, to its first
solution, and whatever it writes replaces the chunk in the output.
"""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field

from .engine.database import Database
from .engine.reader import ClauseItem, QueryItem, read_program
from .engine.solver import DEFAULT_STEP_LIMIT, Engine
from .engine.terms import Compound
from .engine.writer import format_term
from .errors import EngineError, PrologSyntaxError, PspError, TemplateError
from .web import builtin_setcookie

log = logging.getLogger(__name__)

OPEN = b"<?psp"
CLOSE = b"?>"


@dataclass(frozen=True)
class Html:
    data: bytes


@dataclass(frozen=True)
class Code:
    data: bytes
    line: int
    column: int

    @property
    def source(self) -> str:
        return self.data.decode("utf-8")


@dataclass(frozen=True)
class PspDocument:
    segments: tuple
    filename: str | None = None

    def reassemble(self) -> bytes:
        out = bytearray()
        for seg in self.segments:
            if isinstance(seg, Html):
                out += seg.data
            else:
                out += OPEN + seg.data + CLOSE
        return bytes(out)

    @property
    def chunks(self) -> list[Code]:
        return [seg for seg in self.segments if isinstance(seg, Code)]


def _position(source: bytes, offset: int) -> tuple[int, int]:
    line = source.count(b"\n", 0, offset) + 1
    line_start = source.rfind(b"\n", 0, offset) + 1
    column = len(source[line_start:offset].decode("utf-8", "replace")) + 1
    return line, column


def segment_document(source: bytes, filename: str | None = None) -> PspDocument:
    """Split raw file bytes into Html and Code segments.

    Purely lexical: a delimiter inside a quoted Prolog atom still counts.
    """
    segments = []
    pos = 0
    while True:
        start = source.find(OPEN, pos)
        if start < 0:
            if pos < len(source):
                segments.append(Html(source[pos:]))
            break
        if start > pos:
            segments.append(Html(source[pos:start]))
        end = source.find(CLOSE, start + len(OPEN))
        line, column = _position(source, start)
        if end < 0:
            raise TemplateError("unterminated <?psp chunk", line, column)
        segments.append(Code(source[start + len(OPEN):end], line, column))
        pos = end + len(CLOSE)
    return PspDocument(tuple(segments), filename)


def parse_chunk(code: Code, filename: str | None = None) -> list:
    """Read a chunk's clauses and queries, with positions relative to the file."""
    # the chunk body starts right after the five-byte opening delimiter
    line_offset = code.line - 1
    column_offset = code.column + len(OPEN) - 1
    try:
        text = code.source
    except UnicodeDecodeError:
        raise PrologSyntaxError("chunk is not valid UTF-8", code.line, code.column, filename) from None
    try:
        items = read_program(text)
    except PrologSyntaxError as exc:
        raise exc.relocate(line_offset, column_offset, filename) from None

    def shift(item):
        column = item.column + column_offset if item.line == 1 else item.column
        return dataclasses.replace(item, line=item.line + line_offset, column=column)

    return [shift(item) for item in items]


@dataclass
class Diagnostic:
    message: str
    line: int = 0
    column: int = 0

    def __str__(self) -> str:
        return f"{self.line}:{self.column}: {self.message}" if self.line else self.message


class Page:
    """A segmented document with every chunk parsed up front.

    Parse errors are kept and raised when rendering reaches the chunk, so a
    page is immutable and can be cached and shared between requests.
    """

    def __init__(self, document: PspDocument):
        self.document = document
        self.parts = []
        for seg in document.segments:
            if isinstance(seg, Html):
                self.parts.append(seg)
                continue
            try:
                self.parts.append(parse_chunk(seg, document.filename))
            except PspError as exc:
                self.parts.append(exc)

    @classmethod
    def from_bytes(cls, source: bytes, filename: str | None = None) -> "Page":
        return cls(segment_document(source, filename))


class RenderSession:
    """Per-render state: request database layer, body buffer, pending headers."""

    def __init__(self, base: Database | None = None, step_limit: int = DEFAULT_STEP_LIMIT, occurs_check: bool = True):
        self.db = base.fork() if base is not None else Database()
        self.body = bytearray()
        self.pending_headers: list[tuple[str, str]] = []
        self.diagnostics: list[Diagnostic] = []
        self.engine = Engine(
            self.db,
            sink=self,
            step_limit=step_limit,
            occurs_check=occurs_check,
            builtins={("setcookie", 6): lambda engine, *args: builtin_setcookie(args, self)},
        )

    # sink protocol used by the engine
    def write(self, text: str) -> None:
        self.body += text.encode("utf-8")

    @property
    def output_started(self) -> bool:
        return self.engine.output_started

    @property
    def budget(self) -> int:
        return self.engine.budget

    def note(self, message: str, line: int = 0, column: int = 0) -> None:
        self.diagnostics.append(Diagnostic(message, line, column))
        log.info("%s", self.diagnostics[-1])


def run_items(session: RenderSession, items) -> None:
    """Assert clauses and run queries in order against ``session``."""
    engine = session.engine
    for item in items:
        if isinstance(item, ClauseItem):
            engine.assert_clause(Compound(":-", (item.head, item.body)))
            continue
        assert isinstance(item, QueryItem)
        try:
            result = engine.solve(item.goal, item.variables)
        except EngineError as exc:
            if exc.kind != "existence":
                raise
            session.note(f"query failed: {exc}", item.line, item.column)
            continue
        if result is None:
            session.note(f"query failed: {format_term(item.goal, quoted=True)}", item.line, item.column)


def render_document(doc: PspDocument | Page, session: RenderSession) -> tuple[bytes, list[Diagnostic]]:
    """Render into ``session.body``; abort by raising on engine or syntax errors."""
    page = doc if isinstance(doc, Page) else Page(doc)
    for part in page.parts:
        if isinstance(part, Html):
            session.body += part.data
        elif isinstance(part, PspError):
            raise part
        else:
            run_items(session, part)
    return bytes(session.body), session.diagnostics


@dataclass
class Rendered:
    body: bytes
    headers: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)


def render_bytes(source: bytes, base: Database | None = None, step_limit: int = DEFAULT_STEP_LIMIT) -> Rendered:
    """Render a document with no request data; handy in scripts and tests."""
    session = RenderSession(base, step_limit)
    body, diagnostics = render_document(Page.from_bytes(source), session)
    return Rendered(body, list(session.pending_headers), list(diagnostics))
