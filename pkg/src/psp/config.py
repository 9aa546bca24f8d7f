"""Server configuration and prelude loading."""

from __future__ import annotations

import dataclasses
import io
import logging
from dataclasses import dataclass, field
from pathlib import Path

from .engine.database import Database
from .engine.reader import ClauseItem, read_program
from .engine.solver import DEFAULT_STEP_LIMIT, Engine
from .engine.terms import Compound
from .engine.writer import format_term
from .errors import BudgetExceeded, EngineError, PrologSyntaxError, PspError

log = logging.getLogger(__name__)


class ConfigError(PspError):
    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"{key}: {message}")


class PreludeError(PspError):
    pass


@dataclass
class ServerConfig:
    host: str = "127.0.0.1"
    port: int = 8080
    docroot: Path = Path(".")
    preludes: list[Path] = field(default_factory=list)
    step_limit: int = DEFAULT_STEP_LIMIT
    index_file: str = "index.psp"
    debug: bool = False
    max_body: int = 1024 * 1024
    occurs_check: bool = True

    def validate(self, require_docroot: bool = True) -> "ServerConfig":
        if not 0 <= self.port <= 65535:
            raise ConfigError("port", f"{self.port} is outside 0..65535")
        if self.step_limit <= 0:
            raise ConfigError("step_limit", "must be a positive integer")
        if self.max_body < 0:
            raise ConfigError("max_body", "must not be negative")
        if not self.index_file or "/" in self.index_file:
            raise ConfigError("index_file", "must be a plain file name")
        if require_docroot and not Path(self.docroot).is_dir():
            raise ConfigError("docroot", f"{self.docroot} is not a directory")
        return self


_FIELDS = {f.name: f for f in dataclasses.fields(ServerConfig)}
_TRUTHY = {"1", "true", "yes", "on"}
_FALSY = {"0", "false", "no", "off"}


def convert(key: str, raw: str, base_dir: Path | None = None):
    """Turn the text of a config value into the field's type."""
    if key not in _FIELDS:
        raise ConfigError(key, "unknown configuration key")
    kind = _FIELDS[key].type
    raw = raw.strip()
    if kind == "bool":
        lowered = raw.lower()
        if lowered in _TRUTHY:
            return True
        if lowered in _FALSY:
            return False
        raise ConfigError(key, f"expected a boolean, got {raw!r}")
    if kind == "int":
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(key, f"expected an integer, got {raw!r}") from None
    if kind == "Path":
        return _path(raw, base_dir)
    if kind == "list[Path]":
        return [_path(p.strip(), base_dir) for p in raw.split(",") if p.strip()]
    return raw


def _path(raw: str, base_dir: Path | None) -> Path:
    p = Path(raw).expanduser()
    if base_dir is not None and not p.is_absolute():
        p = base_dir / p
    return p


def read_config_file(path: str | Path) -> dict:
    """Parse ``key = value`` lines; relative paths resolve against the file's directory."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
    values: dict = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, raw = line.partition("=")
        key = key.strip()
        if not sep:
            raise ConfigError(key or f"line {lineno}", f"{path}:{lineno}: expected 'key = value'")
        value = convert(key, raw, path.parent)
        if key == "preludes":
            values.setdefault("preludes", []).extend(value)
        else:
            values[key] = value
    return values


def load_preludes(paths, step_limit: int = DEFAULT_STEP_LIMIT, occurs_check: bool = True) -> Database:
    """Consult prelude files into a frozen base database.

    Queries in a prelude run at load time; their output goes to the log.
    """
    db = Database()
    for path in paths:
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as exc:
            raise PreludeError(f"cannot read prelude {path}: {exc}") from None
        try:
            items = read_program(text)
        except PrologSyntaxError as exc:
            exc.filename = str(path)
            raise PreludeError(f"syntax error in prelude {exc}") from None
        except EngineError as exc:
            raise PreludeError(f"{path}: {exc}") from None
        for item in items:
            sink = io.StringIO()
            engine = Engine(db, sink=sink, step_limit=step_limit, occurs_check=occurs_check)
            try:
                if isinstance(item, ClauseItem):
                    engine.assert_clause(Compound(":-", (item.head, item.body)))
                    continue
                result = engine.solve(item.goal, item.variables)
            except BudgetExceeded:
                raise PreludeError(f"{path}:{item.line}: step budget exhausted in load-time query") from None
            except EngineError as exc:
                if exc.kind != "existence":
                    raise PreludeError(f"{path}:{item.line}: {exc}") from None
                log.warning("%s:%d: %s", path, item.line, exc)
                continue
            finally:
                if sink.getvalue():
                    log.info("prelude %s: %s", path, sink.getvalue().rstrip("\n"))
            if result is None:
                log.warning("%s:%d: query failed: %s", path, item.line, format_term(item.goal, quoted=True))
    return db.freeze()
