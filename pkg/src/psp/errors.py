"""Exception hierarchy shared by the engine, the template layer and the gateway."""

from __future__ import annotations


class PspError(Exception):
    """Base class for every error raised by this package."""


class PrologSyntaxError(PspError):
    """Lexical or syntactic error in Prolog source text."""

    def __init__(self, message: str, line: int = 0, column: int = 0, filename: str | None = None):
        self.message = message
        self.line = line
        self.column = column
        self.filename = filename
        super().__init__(str(self))

    def relocate(self, line_offset: int, column_offset: int, filename: str | None = None) -> "PrologSyntaxError":
        # column offset only applies to the first line of a chunk
        column = self.column + column_offset if self.line == 1 else self.column
        return type(self)(self.message, self.line + line_offset, column, filename or self.filename)

    def __str__(self) -> str:
        where = f"{self.line}:{self.column}"
        if self.filename:
            where = f"{self.filename}:{where}"
        return f"{where}: {self.message}"


class EngineError(PspError):
    """Runtime error raised while solving a goal.

    ``kind`` is one of ``instantiation``, ``type``, ``existence``,
    ``arithmetic`` or ``overflow``; ``culprit`` is the offending term.
    """

    KINDS = ("instantiation", "type", "existence", "arithmetic", "overflow")

    def __init__(self, kind: str, culprit, message: str = ""):
        if kind not in self.KINDS:
            raise ValueError(f"unknown error kind {kind!r}")
        self.kind = kind
        self.culprit = culprit
        self.message = message
        super().__init__(str(self))

    def __str__(self) -> str:
        from .engine.writer import format_term

        text = f"{self.kind} error: {format_term(self.culprit, quoted=True)}"
        return f"{text} ({self.message})" if self.message else text


class BudgetExceeded(PspError):
    """The step budget ran out before the goal finished."""


class TemplateError(PspError):
    """Malformed PSP document (e.g. an unterminated chunk)."""

    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.line = line
        self.column = column
        super().__init__(f"{line}:{column}: {message}")


class DecodeError(PspError):
    """Malformed percent-encoding or non UTF-8 payload in request data."""
