import threading
from collections import defaultdict
from pathlib import Path

import pytest

from psp.config import ServerConfig, load_preludes
from psp.gateway import make_server

ROOT = Path(__file__).resolve().parent.parent
SITE = ROOT / "site"

_criteria: dict[int, dict] = defaultdict(lambda: {"title": "", "outcomes": [], "failed": []})


def pytest_runtest_logreport(report):
    marks = getattr(report, "_criterion", None)
    if marks is None:
        return
    # a criterion fails if any of its tests fails in setup, call or teardown
    if report.when == "call" or report.outcome != "passed":
        entry = _criteria[marks[0]]
        entry["outcomes"].append(report.outcome)
        if report.outcome != "passed":
            entry["failed"].append(report.nodeid.split("::")[-1])


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    mark = item.get_closest_marker("criterion")
    if mark is not None:
        number, title = mark.args
        _criteria[number]["title"] = title
        outcome.get_result()._criterion = (number, title)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        entry = _criteria[number]
        ok = entry["outcomes"] and all(o == "passed" for o in entry["outcomes"])
        status = "PASS" if ok else "FAIL"
        line = f"criterion {number}: {status}  {entry['title']} ({len(entry['outcomes'])} checks)"
        if entry["failed"]:
            line += f"; failing: {', '.join(entry['failed'])}"
        terminalreporter.write_line(line)


class RunningServer:
    def __init__(self, config: ServerConfig, base_db=None):
        self.config = config
        self.server = make_server(config, base_db)
        self.host, self.port = self.server.server_address[:2]
        self.thread = threading.Thread(target=self.server.serve_forever, daemon=True)
        self.thread.start()

    def close(self):
        self.server.shutdown()
        self.server.server_close()


def start_server(docroot, preludes=(), **overrides) -> RunningServer:
    config = ServerConfig(host="127.0.0.1", port=0, docroot=Path(docroot), preludes=list(preludes), **overrides)
    base = load_preludes(config.preludes, config.step_limit, config.occurs_check)
    return RunningServer(config, base)


@pytest.fixture
def site_server():
    srv = start_server(SITE)
    yield srv
    srv.close()
