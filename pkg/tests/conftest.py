"""Shared pytest hooks: print one pass/fail line per acceptance criterion."""

import re

_results = {}


def pytest_runtest_logreport(report):
    if report.when != "call":
        return
    m = re.search(r"test_acceptance\.py::test_(criterion_\d+\w*)", report.nodeid)
    if m:
        _results[m.group(1)] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.write_line("")
    terminalreporter.write_line("acceptance criteria:")
    for name in sorted(_results):
        label = name.replace("criterion_", "criterion ").replace("_", " ")
        outcome = "PASS" if _results[name] == "passed" else "FAIL"
        terminalreporter.write_line(f"  {label}: {outcome}")
