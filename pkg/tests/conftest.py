"""Collects acceptance-criterion outcomes and prints one line per criterion."""
from __future__ import annotations

import pytest

_outcomes: dict[int, dict] = {}


def pytest_runtest_makereport(item, call):
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    number, title = mark.args
    entry = _outcomes.setdefault(number, {"title": title, "passed": 0, "failed": [], "skipped": 0})
    if call.excinfo is not None and call.excinfo.errisinstance(pytest.skip.Exception):
        if call.when in ("setup", "call"):
            entry["skipped"] += 1
    elif call.when == "call":
        if call.excinfo is None:
            entry["passed"] += 1
        else:
            entry["failed"].append(item.name)
    elif call.when == "setup" and call.excinfo is not None:
        entry["failed"].append(item.name)


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_outcomes):
        e = _outcomes[number]
        if e["failed"]:
            status = "FAIL"
            detail = f"{len(e['failed'])} failing: {', '.join(e['failed'][:4])}"
        elif e["passed"]:
            status = "PASS"
            detail = f"{e['passed']} checks"
        else:
            status = "SKIP"
            detail = "inputs not supplied"
        terminalreporter.write_line(f"criterion {number:2d} {status}  {e['title']} ({detail})")
