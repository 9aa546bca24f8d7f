import subprocess
import sys
from pathlib import Path

import pytest

from conftest import SITE
from psp import cli
from psp.cli import UsageError, parse_args, render_once


def test_render_hello(capsysbinary):
    assert cli.main(["render", str(SITE / "hello.psp")]) == 0
    out, err = capsysbinary.readouterr()
    assert b"Hello, World!" in out
    assert err.startswith(b"Status: 200 OK\n")


def test_render_form_handler(capsysbinary):
    argv = ["render", str(SITE / "form_handler.psp"), "--arg", "firstname=Andrei", "--arg", "lastname=Vancea",
            "--arg", "email=andrei@xanadu.ro"]
    assert cli.main(argv) == 0
    out, _ = capsysbinary.readouterr()
    assert b"First name : Andrei<br>" in out


def test_render_cookie_headers_on_stderr(capsysbinary):
    assert cli.main(["render", str(SITE / "cookie.psp"), "--cookie", "id=42"]) == 0
    out, err = capsysbinary.readouterr()
    assert b"Set-Cookie: id=42; path=/" in err and b"Set-Cookie" not in out
    assert b"visitor 42" in out


def test_post_and_get_agree():
    args = [("firstname", "A b"), ("email", "x@y")]
    get, _ = render_once(SITE / "form_handler.psp", "GET", args)
    post, _ = render_once(SITE / "form_handler.psp", "POST", args)
    assert get.body == post.body


def test_missing_file_exits_2(capsys):
    assert cli.main(["render", "missing.psp"]) == 2
    assert render_once("missing.psp") == (None, 2)


def test_render_abort_exits_1(tmp_path, capsysbinary):
    page = tmp_path / "bad.psp"
    page.write_bytes(b"<?psp ?-X is 1/0. ?>")
    assert cli.main(["render", str(page)]) == 1
    assert b"500" in capsysbinary.readouterr().err


@pytest.mark.parametrize("argv", [
    [], ["bogus"], ["render"], ["render", "x.psp", "--arg", "novalue"], ["render", "x.psp", "--method", "PUT"],
    ["serve", "--port", "abc"], ["serve", "--root", "/definitely/not/here"],
])
def test_usage_errors(argv):
    with pytest.raises(UsageError):
        parse_args(argv)
    assert cli.main(argv) == 2


def test_precedence_flag_over_file_over_default(tmp_path):
    conf = tmp_path / "psp.conf"
    conf.write_text("port = 9001\nhost = 0.0.0.0\nstep_limit = 500\n")
    inv = parse_args(["serve", "--config", str(conf), "--root", str(tmp_path), "--port", "9002"])
    c = inv.config
    assert c.port == 9002          # flag wins
    assert c.host == "0.0.0.0"     # file beats default
    assert c.step_limit == 500
    assert c.index_file == "index.psp"  # default


@pytest.mark.parametrize("flag,field,raw,value", [
    ("--host", "host", "::1", "::1"),
    ("--step-limit", "step_limit", "7", 7),
    ("--index", "index_file", "main.psp", "main.psp"),
    ("--max-body", "max_body", "10", 10),
])
def test_each_flag_overrides_file(tmp_path, flag, field, raw, value):
    conf = tmp_path / "psp.conf"
    conf.write_text(f"{field} = {'1' if field != 'host' and field != 'index_file' else 'other'}\n")
    inv = parse_args(["render", "x.psp", "--config", str(conf), flag, raw])
    assert getattr(inv.config, field) == value


def test_boolean_flags(tmp_path):
    inv = parse_args(["render", "x.psp", "--debug", "--no-occurs-check"])
    assert inv.config.debug is True and inv.config.occurs_check is False
    inv = parse_args(["render", "x.psp"])
    assert inv.config.debug is False and inv.config.occurs_check is True


def test_preludes_flag(tmp_path, capsysbinary):
    pre = tmp_path / "pre.pl"
    pre.write_text("greeting('Hi').\n")
    page = tmp_path / "p.psp"
    page.write_bytes(b"<?psp ?-greeting(X), write(X). ?>")
    assert cli.main(["render", str(page), "--prelude", str(pre)]) == 0
    assert capsysbinary.readouterr().out == b"Hi"


def test_bad_prelude_exits_nonzero(tmp_path):
    pre = tmp_path / "pre.pl"
    pre.write_text("p(.\n")
    page = tmp_path / "p.psp"
    page.write_bytes(b"x")
    assert cli.main(["render", str(page), "--prelude", str(pre)]) == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "psp", "render", str(SITE / "hello.psp")], capture_output=True, timeout=60)
    assert proc.returncode == 0 and b"Hello, World!" in proc.stdout


def test_serve_stops_on_sigterm(tmp_path):
    import signal
    import socket
    import time

    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        port = s.getsockname()[1]
    proc = subprocess.Popen([sys.executable, "-m", "psp", "serve", "--root", str(SITE), "--port", str(port)],
                            stdout=subprocess.PIPE, stderr=subprocess.PIPE)
    try:
        deadline = time.time() + 15
        while time.time() < deadline:
            try:
                socket.create_connection(("127.0.0.1", port), timeout=1).close()
                break
            except OSError:
                time.sleep(0.05)
        proc.send_signal(signal.SIGTERM)
        assert proc.wait(timeout=15) == 0
    finally:
        if proc.poll() is None:
            proc.kill()
