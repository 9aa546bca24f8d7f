"""Acceptance criteria, one ``criterion`` marker per criterion.

Run ``pytest tests/test_acceptance.py`` (or execute this file) to get one
PASS/FAIL line per criterion in the terminal summary.  Tolerances are pinned
in the constants below.
"""

from __future__ import annotations

import io
import random
import re
import subprocess
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from urllib.parse import urlencode

import pytest

import oracles
import wire
from conftest import SITE, start_server
from psp.cli import render_once
from psp.config import ServerConfig
from psp.engine import Database, Engine, format_term, read_program, read_term, unify
from psp.engine.solver import DEFAULT_STEP_LIMIT
from psp.engine.terms import Compound, has_binding_cycle, resolve
from psp.errors import BudgetExceeded

RENDER_SECONDS = 1.0
LOOP_SECONDS = 5.0
UNIFY_CASES = 10_000
ROUND_TRIP_CASES = 10_000
ORACLE_PROGRAMS = 200
MAX_CLAUSES = 30
CONCURRENT_REQUESTS = 100
SEED = 20031

GOLDEN = Path(__file__).parent / "golden"

# The rendered page shown after the hello world source, as printed.
EXAMPLE_2 = """<html>
<head>
<title> PSP example </title>
</head>
<body>
Hello, World!
</body>
</html>
"""

FORM_QUERY = "firstname=Andrei&lastname=Vancea&email=andrei%40xanadu.ro"


def normalize(text: str) -> str:
    return " ".join(text.split())


def run_cli(*argv: str) -> subprocess.CompletedProcess:
    return subprocess.run([sys.executable, "-m", "psp", *argv], capture_output=True, timeout=60)


# --- 1. hello world --------------------------------------------------------

C1 = pytest.mark.criterion(1, "hello world page renders to the printed result")


@C1
def test_hello_world_matches_printed_result():
    started = time.perf_counter()
    proc = run_cli("render", str(SITE / "hello.psp"))
    elapsed = time.perf_counter() - started
    assert proc.returncode == 0, proc.stderr.decode()
    assert elapsed < RENDER_SECONDS
    # Literal comparison.  The printed result carries a different <title> than
    # the source it claims to come from, so this cannot hold; see the notes.
    assert normalize(proc.stdout.decode()) == normalize(EXAMPLE_2)


@C1
def test_hello_world_chunk_replaced_by_greeting():
    source = (SITE / "hello.psp").read_bytes()
    proc = run_cli("render", str(SITE / "hello.psp"))
    assert proc.returncode == 0
    start = source.index(b"<?psp")
    end = source.index(b"?>") + 2
    assert proc.stdout == source[:start] + b"Hello, World!" + source[end:]
    body = proc.stdout.decode()
    assert re.search(r"<body>\s*Hello, World!\s*</body>", body)
    # everything except the title line agrees with the printed result
    strip_title = lambda text: re.sub(r"<title>.*?</title>", "", text)
    assert normalize(strip_title(body)) == normalize(strip_title(EXAMPLE_2))


# --- 2. form flow ----------------------------------------------------------

C2 = pytest.mark.criterion(2, "form handler over GET and POST")


@C2
def test_form_handler_get_and_post(site_server):
    started = time.perf_counter()
    status, _, get_body = wire.split_response(wire.get(site_server, f"/form_handler.psp?{FORM_QUERY}"))
    elapsed = time.perf_counter() - started
    assert status == 200
    assert elapsed < RENDER_SECONDS
    for expected in (b"First name : Andrei<br>", b"Last name : Vancea<br>", b"Email :andrei@xanadu.ro<br>"):
        assert expected in get_body
    started = time.perf_counter()
    status, _, post_body = wire.split_response(wire.post_form(site_server, "/form_handler.psp", FORM_QUERY))
    assert time.perf_counter() - started < RENDER_SECONDS
    assert status == 200
    assert post_body == get_body


# --- 3. cookies ------------------------------------------------------------

C3 = pytest.mark.criterion(3, "setcookie gating and cookie/2")

COOKIE_FIRST = b"""<?psp
?-setcookie('id', '42', '', '', '/', false).
?-write('cookie set').
?>
"""

WRITE_FIRST = b"""<?psp
?-write('too late').
?-setcookie('id', '42', '', '', '/', false).
?>
"""

READ_COOKIE = b"""<p><?psp
?-cookie('id',X), write(X).
?></p>
"""


@pytest.fixture
def cookie_server(tmp_path):
    (tmp_path / "set.psp").write_bytes(COOKIE_FIRST)
    (tmp_path / "late.psp").write_bytes(WRITE_FIRST)
    (tmp_path / "read.psp").write_bytes(READ_COOKIE)
    srv = start_server(tmp_path)
    yield srv
    srv.close()


@C3
def test_setcookie_before_output_emits_header(cookie_server):
    raw = wire.get(cookie_server, "/set.psp")
    head, sep, body = raw.partition(b"\r\n\r\n")
    assert sep
    lines = head.split(b"\r\n")
    cookies = [line for line in lines if line.lower().startswith(b"set-cookie:")]
    assert cookies == [b"Set-Cookie: id=42; path=/"]
    assert b"Set-Cookie" not in body
    assert b"cookie set" in body


@C3
def test_setcookie_after_output_is_ignored(cookie_server):
    status, headers, body = wire.split_response(wire.get(cookie_server, "/late.psp"))
    assert status == 200
    assert [h for h in headers if h[0].lower() == "set-cookie"] == []
    assert b"too late" in body


@C3
def test_inbound_cookie_becomes_fact(cookie_server):
    status, _, body = wire.split_response(wire.get(cookie_server, "/read.psp", [("Cookie", "id=42")]))
    assert status == 200
    assert body == b"<p>42</p>\n"


# --- 4. engine properties --------------------------------------------------

C4 = pytest.mark.criterion(4, "engine property suite")


@C4
def test_unification_soundness_and_symmetry():
    rng = random.Random(SEED)
    unified = 0
    for _ in range(UNIFY_CASES):
        pool = [oracles.Var(f"X{i}", 1_000_000 + rng.randrange(10**8)) for i in range(3)]
        a = oracles.small_term(rng, pool, 3)
        b = oracles.small_term(rng, pool, 3)
        s_ab = unify(a, b)
        s_ba = unify(b, a)
        reference = oracles.robinson(a, b)
        assert (s_ab is None) == (reference is None), (a, b)
        assert (s_ab is None) == (s_ba is None), (a, b)
        if s_ab is None:
            continue
        unified += 1
        assert not has_binding_cycle(s_ab)
        left, right = resolve(a, s_ab), resolve(b, s_ab)
        assert left == right
        # both orders and the reference all find the same most general unifier
        assert oracles.variant(left, resolve(a, s_ba))
        assert oracles.variant(left, oracles.ground_apply(a, reference))
    # the generator must exercise both outcomes
    assert UNIFY_CASES // 10 < unified < UNIFY_CASES - UNIFY_CASES // 10


@C4
def test_parser_round_trip():
    rng = random.Random(SEED + 1)
    gen = oracles.TermGen(rng)
    for _ in range(ROUND_TRIP_CASES):
        term = gen.term(depth=4)
        text = format_term(term, quoted=True)
        back = read_term(text)
        assert oracles.variant(term, back), (term, text, back)


def _solve_text(engine: Engine, text: str):
    item = read_program(text)[0]
    return engine.solve(item.goal, item.variables)


@C4
def test_solver_agrees_with_bottom_up_oracle():
    rng = random.Random(SEED + 2)
    checked = 0
    for _ in range(ORACLE_PROGRAMS):
        preds, clauses = oracles.random_program(rng, MAX_CLAUSES)
        assert len(clauses) <= MAX_CLAUSES
        model = oracles.bottom_up(clauses)
        db = Database()
        for name, arity in preds.items():
            db.declare_dynamic((name, arity))
        loader = Engine(db)
        for item in read_program(oracles.program_source(clauses)):
            loader.assert_clause(Compound(":-", (item.head, item.body)))
        for atom in oracles.all_ground_atoms(preds):
            # each query gets its own engine, hence its own step budget
            result = _solve_text(Engine(db), f"?-{oracles.atom_source(atom)}.")
            assert (result is not None) == (atom in model), (oracles.program_source(clauses), atom)
            checked += 1
        # open queries: the first solution exists iff the model has one, and lies in it.
        # Exhaustive enumeration is avoided on purpose: duplicate proofs make the
        # SLD tree exponential even for tiny ground programs.
        for name, arity in preds.items():
            if arity == 0:
                continue
            names = [f"X{i}" for i in range(arity)]
            result = _solve_text(Engine(db), f"?-{name}({', '.join(names)}).")
            answers = {args for n, args in model if n == name}
            assert (result is not None) == bool(answers)
            if result is not None:
                assert tuple(result.value(n).name for n in names) in answers
    assert checked >= ORACLE_PROGRAMS


@C4
def test_infinite_recursion_hits_step_budget():
    engine = Engine(Database())
    engine.assert_clause(read_term("loop :- loop"))
    started = time.perf_counter()
    with pytest.raises(BudgetExceeded):
        _solve_text(engine, "?-loop.")
    assert time.perf_counter() - started < LOOP_SECONDS
    assert engine.step_limit == DEFAULT_STEP_LIMIT


# --- 5. isolation and determinism -------------------------------------------

C5 = pytest.mark.criterion(5, "request isolation and determinism")

ASSERTING_PAGE = b"""<ul>
<?psp
?-arg(n, N), assert(seen(N)), assert(seen(twice(N))).
?-greeting(G), write(G), nl.
?-assert(greeting(hacked)).
?-seen(X), write('<li>'), write(X), write('</li>'), nl, fail ; true.
?>
</ul>
"""


@pytest.fixture
def asserting_site(tmp_path):
    (tmp_path / "page.psp").write_bytes(ASSERTING_PAGE)
    prelude = tmp_path / "prelude.pl"
    prelude.write_text("greeting('Hi').\n")
    return tmp_path, prelude


@C5
def test_concurrent_requests_match_serial_renders(asserting_site):
    root, prelude = asserting_site
    config = ServerConfig(docroot=root, preludes=[prelude])
    expected = {}
    for n in range(CONCURRENT_REQUESTS):
        response, code = render_once(root / "page.psp", "GET", [("n", str(n))], config=config)
        assert code == 0
        expected[n] = response.body
    assert b"hacked" not in expected[0]
    srv = start_server(root, [prelude])
    try:
        def fetch(n):
            return n, wire.split_response(wire.get(srv, f"/page.psp?{urlencode({'n': n})}"))

        order = list(range(CONCURRENT_REQUESTS))
        random.Random(SEED + 3).shuffle(order)
        with ThreadPoolExecutor(max_workers=16) as pool:
            results = list(pool.map(fetch, order))
    finally:
        srv.close()
    for n, (status, _, body) in results:
        assert status == 200
        assert body == expected[n]


@C5
def test_repeated_requests_are_byte_identical(site_server):
    first = wire.get(site_server, f"/form_handler.psp?{FORM_QUERY}")
    for _ in range(20):
        assert wire.get(site_server, f"/form_handler.psp?{FORM_QUERY}") == first


# --- 6. pipeline equivalence -----------------------------------------------

C6 = pytest.mark.criterion(6, "render_once equals served body for every golden fixture")


def golden_cases():
    import json

    for spec_file in sorted(GOLDEN.glob("*.json")):
        yield pytest.param(spec_file.stem, json.loads(spec_file.read_text()), id=spec_file.stem)


@pytest.fixture(scope="module")
def golden_server():
    srv = start_server(GOLDEN)
    yield srv
    srv.close()


@C6
@pytest.mark.parametrize("name,case", list(golden_cases()))
def test_golden_fixture(name, case, golden_server):
    page = GOLDEN / case["page"]
    args = [tuple(p) for p in case.get("args", [])]
    cookies = [tuple(p) for p in case.get("cookies", [])]
    method = case.get("method", "GET")

    argv = ["render", str(page), "--method", method]
    argv += [f"--arg={n}={v}" for n, v in args] + [f"--cookie={n}={v}" for n, v in cookies]
    proc = run_cli(*argv)
    assert proc.returncode == (0 if case.get("status", 200) == 200 else 1), proc.stderr.decode()

    headers = []
    if cookies:
        headers.append(("Cookie", "; ".join(f"{n}={v}" for n, v in cookies)))
    if method == "POST":
        raw = wire.post_form(golden_server, f"/{case['page']}", urlencode(args), headers)
    else:
        query = urlencode(args)
        raw = wire.get(golden_server, f"/{case['page']}" + (f"?{query}" if query else ""), headers)
    status, served_headers, body = wire.split_response(raw)
    assert status == case.get("status", 200)
    assert proc.stdout == body
    # the set-cookie headers printed on stderr match the wire
    cli_cookies = [line for line in proc.stderr.decode().splitlines() if line.startswith("Set-Cookie:")]
    assert cli_cookies == [f"{n}: {v}" for n, v in served_headers if n == "Set-Cookie"]
    assert body == (GOLDEN / f"{name}.out").read_bytes()


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
