"""Standalone HTTP/1.1 front end: request parsing, routing and responses.

Every response is fully buffered, which is what lets setcookie/6 add headers
while the page body is still being produced.
"""

from __future__ import annotations

import html
import logging
import os
import re
import signal
import socketserver
import threading
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from http import HTTPStatus
from pathlib import Path

from . import __version__
from .config import ServerConfig, load_preludes
from .engine.database import Database
from .errors import DecodeError, PspError
from .template import Page, RenderSession, render_document
from .web import bind_request_facts, decode_form, parse_cookie_header, percent_decode

log = logging.getLogger(__name__)
access_log = logging.getLogger("psp.access")

SERVER_NAME = f"psp/{__version__}"
METHODS = ("GET", "POST", "HEAD")
FORM_TYPE = "application/x-www-form-urlencoded"

MEDIA_TYPES = {
    ".html": "text/html",
    ".htm": "text/html",
    ".css": "text/css",
    ".js": "text/javascript",
    ".json": "application/json",
    ".txt": "text/plain",
    ".xml": "application/xml",
    ".svg": "image/svg+xml",
    ".png": "image/png",
    ".jpg": "image/jpeg",
    ".jpeg": "image/jpeg",
    ".gif": "image/gif",
    ".ico": "image/x-icon",
    ".pdf": "application/pdf",
}
DEFAULT_MEDIA_TYPE = "application/octet-stream"

_TOKEN = re.compile(r"[!#$%&'*+.^_`|~0-9A-Za-z-]+\Z")
_VERSION = re.compile(r"HTTP/1\.[01]\Z")


class HttpError(Exception):
    def __init__(self, status: int, message: str = "", headers=()):
        self.status = status
        self.message = message or HTTPStatus(status).phrase
        self.headers = list(headers)
        super().__init__(f"{status} {self.message}")


@dataclass
class HttpRequest:
    method: str
    path: str
    query: str = ""
    headers: list[tuple[str, str]] = field(default_factory=list)
    body: bytes = b""

    def header(self, name: str, default: str | None = None) -> str | None:
        name = name.lower()
        for key, value in self.headers:
            if key.lower() == name:
                return value
        return default

    def header_values(self, name: str) -> list[str]:
        name = name.lower()
        return [value for key, value in self.headers if key.lower() == name]


@dataclass
class HttpResponse:
    status: int
    headers: list[tuple[str, str]] = field(default_factory=list)
    body: bytes = b""
    diagnostics: list = field(default_factory=list)

    @property
    def reason(self) -> str:
        return HTTPStatus(self.status).phrase

    def header(self, name: str) -> str | None:
        for key, value in self.headers:
            if key.lower() == name.lower():
                return value
        return None

    def header_values(self, name: str) -> list[str]:
        return [v for k, v in self.headers if k.lower() == name.lower()]

    def to_bytes(self, include_body: bool = True) -> bytes:
        lines = [f"HTTP/1.1 {self.status} {self.reason}"]
        lines += [f"{k}: {v}" for k, v in self.headers]
        lines.append("Connection: close")
        head = ("\r\n".join(lines) + "\r\n\r\n").encode("latin-1")
        return head + (self.body if include_body else b"")


@dataclass(frozen=True)
class Limits:
    max_line: int = 8192
    max_headers: int = 100
    max_body: int = 1024 * 1024


def _readline(stream, limit: int) -> bytes:
    line = stream.readline(limit + 1)
    if len(line) > limit:
        raise HttpError(431, "header line too long")
    return line


def parse_request(stream, limits: Limits = Limits()) -> HttpRequest | None:
    """Read one request from a binary stream; None if the peer sent nothing."""
    line = _readline(stream, limits.max_line)
    if not line:
        return None
    parts = line.decode("latin-1").rstrip("\r\n").split(" ")
    if len(parts) != 3 or not _TOKEN.match(parts[0]) or not _VERSION.match(parts[2]):
        raise HttpError(400, "malformed request line")
    method, target, _version = parts
    if method not in METHODS:
        raise HttpError(405, headers=[("Allow", ", ".join(METHODS))])

    headers = []
    while True:
        line = _readline(stream, limits.max_line)
        if not line:
            raise HttpError(400, "connection closed inside headers")
        if line in (b"\r\n", b"\n"):
            break
        if len(headers) >= limits.max_headers:
            raise HttpError(431, "too many header fields")
        text = line.decode("latin-1").rstrip("\r\n")
        if text[:1] in (" ", "\t"):
            raise HttpError(400, "folded header lines are not supported")
        name, sep, value = text.partition(":")
        if not sep or not _TOKEN.match(name):
            raise HttpError(400, "malformed header field")
        headers.append((name, value.strip()))

    request = HttpRequest(method, "/", "", headers)
    if request.header("transfer-encoding") is not None:
        raise HttpError(411, "chunked bodies are not supported; send Content-Length")
    lengths = set(request.header_values("content-length"))
    if len(lengths) > 1:
        raise HttpError(400, "conflicting Content-Length headers")
    if lengths:
        raw = lengths.pop()
        if not raw.isdigit():
            raise HttpError(400, "invalid Content-Length")
        length = int(raw)
        if length > limits.max_body:
            raise HttpError(413)
        body = stream.read(length) if length else b""
        if len(body) != length:
            raise HttpError(400, "request body shorter than Content-Length")
        request.body = body

    request.path, request.query = _split_target(target)
    return request


def _split_target(target: str) -> tuple[str, str]:
    m = re.match(r"https?://[^/?#]*", target)
    if m:
        target = target[m.end():] or "/"
    if not target.startswith("/"):
        raise HttpError(400, "request target must be an absolute path")
    target = target.partition("#")[0]
    raw_path, _, query = target.partition("?")
    try:
        return percent_decode(raw_path), query
    except DecodeError:
        raise HttpError(400, "bad percent-encoding in path") from None


# routing


@dataclass(frozen=True)
class PspFile:
    path: Path


@dataclass(frozen=True)
class StaticFile:
    path: Path
    media_type: str


@dataclass(frozen=True)
class NotFound:
    pass


@dataclass(frozen=True)
class Forbidden:
    pass


RouteTarget = PspFile | StaticFile | NotFound | Forbidden


def normalize_path(path: str) -> list[str] | None:
    """Resolve ``.`` and ``..`` segments; None if the path climbs above the root."""
    segments: list[str] = []
    for part in path.split("/"):
        if part in ("", "."):
            continue
        if part == "..":
            if not segments:
                return None
            segments.pop()
        else:
            segments.append(part)
    return segments


def _inside(candidate: Path, root: Path) -> bool:
    # symlinks may point outside the tree
    real = candidate.resolve()
    return real == root or root in real.parents


def route(path: str, docroot, index_file: str = "index.psp") -> RouteTarget:
    if "\x00" in path:
        return Forbidden()
    segments = normalize_path(path)
    if segments is None:
        return Forbidden()
    root = Path(docroot).resolve()
    candidate = root.joinpath(*segments)
    if not _inside(candidate, root):
        return Forbidden()
    if candidate.is_dir():
        candidate = candidate / index_file
        if not _inside(candidate, root):
            return Forbidden()
    if not candidate.is_file():
        return NotFound()
    if candidate.suffix == ".psp":
        return PspFile(candidate)
    return StaticFile(candidate, MEDIA_TYPES.get(candidate.suffix.lower(), DEFAULT_MEDIA_TYPE))


# responses


class DocumentCache:
    """Parsed pages keyed by (path, modification time); safe for concurrent use."""

    def __init__(self):
        self._pages: dict[str, tuple[int, Page]] = {}
        self._lock = threading.Lock()

    def get(self, path: Path) -> Page:
        key = str(path)
        mtime = os.stat(path).st_mtime_ns
        with self._lock:
            hit = self._pages.get(key)
        if hit is not None and hit[0] == mtime:
            return hit[1]
        page = Page.from_bytes(path.read_bytes(), path.name)
        with self._lock:
            self._pages[key] = (mtime, page)
        return page


def _finish(response: HttpResponse) -> HttpResponse:
    response.headers = [("Server", SERVER_NAME)] + [
        (k, v) for k, v in response.headers if k.lower() not in ("server", "content-length")
    ]
    response.headers.append(("Content-Length", str(len(response.body))))
    return response


def error_response(status: int, detail: str | None = None, headers=()) -> HttpResponse:
    phrase = HTTPStatus(status).phrase
    body = f"<html><head><title>{status} {phrase}</title></head><body><h1>{status} {phrase}</h1>"
    if detail:
        body += f"<pre>{html.escape(detail)}</pre>"
    body += "</body></html>\n"
    return _finish(HttpResponse(status, [("Content-Type", "text/html"), *headers], body.encode("utf-8")))


def render_page(page: Page, controls, cookies, config: ServerConfig, base_db: Database | None) -> HttpResponse:
    """Bind request facts into a fresh session and render ``page``."""
    session = RenderSession(base_db, config.step_limit, config.occurs_check)
    bind_request_facts(controls, cookies, session.db)
    try:
        body, diagnostics = render_document(page, session)
    except PspError as exc:
        log.warning("render of %s aborted: %s", page.document.filename, exc)
        detail = None
        if config.debug:
            detail = "\n".join([str(exc), *map(str, session.diagnostics)])
        return error_response(500, detail)
    headers = [("Content-Type", "text/html"), *session.pending_headers]
    return _finish(HttpResponse(200, headers, body, list(diagnostics)))


def request_data(req: HttpRequest) -> tuple[list, list]:
    """Form controls and cookies carried by ``req``; raises DecodeError."""
    if req.method == "POST":
        content_type = (req.header("content-type") or "").split(";")[0].strip().lower()
        encoded = ""
        if content_type == FORM_TYPE:
            try:
                encoded = req.body.decode("utf-8")
            except UnicodeDecodeError:
                raise DecodeError("form body is not UTF-8") from None
        controls = decode_form(encoded)
    else:
        controls = decode_form(req.query)
    cookies = parse_cookie_header("; ".join(req.header_values("cookie")))
    return controls, cookies


def render_file(path: Path, req: HttpRequest, config: ServerConfig, base_db: Database | None, cache=None) -> HttpResponse:
    """The PSP pipeline shared by the server and the offline renderer."""
    try:
        controls, cookies = request_data(req)
    except DecodeError as exc:
        return error_response(400, str(exc) if config.debug else None)
    try:
        page = cache.get(path) if cache is not None else Page.from_bytes(path.read_bytes(), path.name)
    except OSError as exc:
        log.error("cannot read %s: %s", path, exc)
        return error_response(500)
    except PspError as exc:
        log.warning("cannot parse %s: %s", path, exc)
        return error_response(500, str(exc) if config.debug else None)
    return render_page(page, controls, cookies, config, base_db)


def handle_request(req: HttpRequest, config: ServerConfig, base_db: Database | None, cache=None) -> HttpResponse:
    target = route(req.path, config.docroot, config.index_file)
    if isinstance(target, NotFound):
        response = error_response(404)
    elif isinstance(target, Forbidden):
        response = error_response(403)
    elif isinstance(target, StaticFile):
        try:
            data = target.path.read_bytes()
        except OSError as exc:
            log.error("cannot read %s: %s", target.path, exc)
            response = error_response(500)
        else:
            response = _finish(HttpResponse(200, [("Content-Type", target.media_type)], data))
    else:
        response = render_file(target.path, req, config, base_db, cache)
    if req.method == "HEAD":
        response.body = b""
    return response


# server


class _Handler(socketserver.StreamRequestHandler):
    timeout = 30

    def handle(self):
        server: PspServer = self.server
        started = time.monotonic()
        method, path = "-", "-"
        include_body = True
        try:
            req = parse_request(self.rfile, server.limits)
            if req is None:
                return
            method, path = req.method, req.path
            include_body = req.method != "HEAD"
            response = handle_request(req, server.config, server.base_db, server.cache)
        except HttpError as exc:
            response = error_response(exc.status, headers=exc.headers)
        except (TimeoutError, ConnectionError):
            return
        except Exception:
            log.exception("unhandled error serving %s %s", method, path)
            response = error_response(500)
        payload = response.to_bytes(include_body)
        try:
            self.wfile.write(payload)
            self.wfile.flush()
        except OSError:
            pass
        elapsed = (time.monotonic() - started) * 1000
        stamp = datetime.now(timezone.utc).isoformat(timespec="milliseconds")
        sent = len(response.body) if include_body else 0
        access_log.info("%s %s %s %d %.1f %d", stamp, method, path, response.status, elapsed, sent)


class PspServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, config: ServerConfig, base_db: Database | None = None):
        self.config = config
        self.base_db = base_db if base_db is not None else Database()
        self.cache = DocumentCache()
        self.limits = Limits(max_body=config.max_body)
        super().__init__((config.host, config.port), _Handler)

    @property
    def url(self) -> str:
        host, port = self.server_address[:2]
        return f"http://{host}:{port}"


def make_server(config: ServerConfig, base_db: Database | None = None) -> PspServer:
    return PspServer(config, base_db)


def serve(config: ServerConfig) -> int:
    """Load preludes, then serve until SIGINT/SIGTERM.  Returns an exit status."""
    base_db = load_preludes(config.preludes, config.step_limit, config.occurs_check)
    server = make_server(config, base_db)

    def stop(signum, frame):
        # shutdown() blocks until serve_forever returns, so call it off-thread
        threading.Thread(target=server.shutdown, daemon=True).start()

    previous = {sig: signal.signal(sig, stop) for sig in (signal.SIGINT, signal.SIGTERM)}
    log.info("serving %s on %s", config.docroot, server.url)
    try:
        server.serve_forever()
    finally:
        server.server_close()
        for sig, handler in previous.items():
            signal.signal(sig, handler)
    return 0
