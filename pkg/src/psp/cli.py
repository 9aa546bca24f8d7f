"""Command line: ``psp serve`` and ``psp render``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from urllib.parse import urlencode

from .config import ConfigError, PreludeError, ServerConfig, convert, load_preludes, read_config_file
from .gateway import FORM_TYPE, HttpRequest, HttpResponse, render_file, serve

log = logging.getLogger(__name__)

EXIT_OK, EXIT_RENDER_FAILED, EXIT_USAGE = 0, 1, 2

# flag dest -> ServerConfig field
_FLAG_FIELDS = {
    "host": "host",
    "port": "port",
    "root": "docroot",
    "prelude": "preludes",
    "step_limit": "step_limit",
    "index": "index_file",
    "debug": "debug",
    "max_body": "max_body",
    "occurs_check": "occurs_check",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


@dataclass
class Invocation:
    command: str
    config: ServerConfig
    file: Path | None = None
    method: str = "GET"
    args: list[tuple[str, str]] = field(default_factory=list)
    cookies: list[tuple[str, str]] = field(default_factory=list)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="FILE", help="key = value configuration file")
    p.add_argument("--host")
    p.add_argument("--port")
    p.add_argument("--root", metavar="DIR", help="document root")
    p.add_argument("--prelude", action="append", metavar="FILE", help="Prolog file loaded at startup (repeatable)")
    p.add_argument("--step-limit", dest="step_limit")
    p.add_argument("--index", metavar="NAME", help="index file for directories")
    p.add_argument("--debug", action="store_const", const="true")
    p.add_argument("--max-body", dest="max_body")
    p.add_argument("--no-occurs-check", dest="occurs_check", action="store_const", const="false")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="psp", description="Prolog Server Pages")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    serve_p = sub.add_parser("serve", help="run the HTTP server")
    _add_common(serve_p)
    render_p = sub.add_parser("render", help="render one page to standard output")
    _add_common(render_p)
    render_p.add_argument("file", help="the .psp file to render")
    render_p.add_argument("--method", default="GET", type=str.upper, choices=["GET", "POST"])
    render_p.add_argument("--arg", action="append", default=[], metavar="NAME=VALUE", help="form control (repeatable)")
    render_p.add_argument("--cookie", action="append", default=[], metavar="NAME=VALUE", help="inbound cookie (repeatable)")
    return parser


def _pairs(values, flag: str) -> list[tuple[str, str]]:
    pairs = []
    for value in values:
        name, sep, rest = value.partition("=")
        if not sep or not name:
            raise UsageError(f"{flag} expects NAME=VALUE, got {value!r}")
        pairs.append((name, rest))
    return pairs


def parse_args(argv) -> Invocation:
    """Flags override the config file, which overrides defaults."""
    ns = build_parser().parse_args(argv)
    settings: dict = {}
    try:
        if ns.config:
            settings.update(read_config_file(ns.config))
        for dest, key in _FLAG_FIELDS.items():
            value = getattr(ns, dest)
            if value is None:
                continue
            if key == "preludes":
                settings[key] = [Path(v) for v in value]
            else:
                settings[key] = convert(key, value)
        config = ServerConfig(**settings)
        config.validate(require_docroot=ns.command == "serve")
    except ConfigError as exc:
        raise UsageError(f"invalid configuration: {exc}") from None
    inv = Invocation(ns.command, config)
    if ns.command == "render":
        inv.file = Path(ns.file)
        inv.method = ns.method
        inv.args = _pairs(ns.arg, "--arg")
        inv.cookies = _pairs(ns.cookie, "--cookie")
    return inv


def synthetic_request(method: str, args, cookies) -> HttpRequest:
    """The request a browser would send for these controls and cookies."""
    encoded = urlencode(args)
    headers = [("Host", "localhost")]
    if cookies:
        headers.append(("Cookie", "; ".join(f"{n}={v}" for n, v in cookies)))
    if method == "POST":
        body = encoded.encode("utf-8")
        headers += [("Content-Type", FORM_TYPE), ("Content-Length", str(len(body)))]
        return HttpRequest("POST", "/", "", headers, body)
    return HttpRequest("GET", "/", encoded, headers)


def render_once(path, method="GET", args=(), cookies=(), config: ServerConfig | None = None, base_db=None) -> tuple[HttpResponse | None, int]:
    """Run the server's render pipeline on one file without a socket."""
    config = config or ServerConfig()
    path = Path(path)
    if not path.is_file():
        return None, EXIT_USAGE
    if base_db is None:
        base_db = load_preludes(config.preludes, config.step_limit, config.occurs_check)
    response = render_file(path, synthetic_request(method, list(args), list(cookies)), config, base_db)
    return response, EXIT_OK if response.status == 200 else EXIT_RENDER_FAILED


def _setup_logging(command: str, debug: bool) -> None:
    level = logging.DEBUG if debug else logging.INFO if command == "serve" else logging.WARNING
    logging.basicConfig(level=level, format="%(message)s" if command == "serve" else "%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    try:
        inv = parse_args(sys.argv[1:] if argv is None else argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    _setup_logging(inv.command, inv.config.debug)
    try:
        if inv.command == "serve":
            return serve(inv.config)
        if not inv.file.is_file():
            print(f"psp render: no such file: {inv.file}", file=sys.stderr)
            return EXIT_USAGE
        response, code = render_once(inv.file, inv.method, inv.args, inv.cookies, inv.config)
    except PreludeError as exc:
        print(f"psp: {exc}", file=sys.stderr)
        return EXIT_USAGE if inv.command == "render" else 1
    except OSError as exc:
        print(f"psp: {exc}", file=sys.stderr)
        return 1
    print(f"Status: {response.status} {response.reason}", file=sys.stderr)
    for name, value in response.headers:
        print(f"{name}: {value}", file=sys.stderr)
    sys.stderr.flush()
    sys.stdout.buffer.write(response.body)
    sys.stdout.buffer.flush()
    return code


__all__ = ["Invocation", "UsageError", "main", "parse_args", "render_once"]
