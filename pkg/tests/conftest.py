import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

_RESULTS: dict[int, dict] = {}


@pytest.fixture
def report(request):
    """Attach measured figures to the acceptance summary line."""
    notes = []
    request.node.user_properties.append(("notes", notes))
    return notes.append


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None or rep.when not in ("setup", "call"):
        return
    number = mark.args[0]
    entry = _RESULTS.setdefault(number, {"ok": True, "notes": [], "title": mark.kwargs.get("title", "")})
    if rep.failed or (rep.when == "setup" and rep.skipped):
        entry["ok"] = False
    if rep.when == "call":
        entry["seconds"] = entry.get("seconds", 0.0) + rep.duration
        for key, value in item.user_properties:
            if key == "notes":
                entry["notes"].extend(value)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_RESULTS):
        e = _RESULTS[number]
        status = "PASS" if e["ok"] else "FAIL"
        line = f"criterion {number:2d} {status}  {e['title']} ({e.get('seconds', 0.0):.1f}s)"
        tr.write_line(line)
        for note in e["notes"]:
            tr.write_line(f"              {note}")
