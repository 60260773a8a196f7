"""Prints one PASS/FAIL/SKIP line per acceptance criterion at the end of the run."""

import pytest

_RESULTS = []


@pytest.hookimpl(wrapper=True)
def pytest_runtest_makereport(item, call):
    report = yield
    marker = item.get_closest_marker("acceptance")
    if marker is not None and (call.when == "call" or report.outcome != "passed"):
        outcome = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[report.outcome]
        if call.when != "call" and outcome == "FAIL":
            outcome = "ERROR"
        detail = dict(item.user_properties).get("detail", "")
        if outcome == "SKIP" and isinstance(report.longrepr, tuple):
            detail = report.longrepr[2]
        _RESULTS.append((marker.args, outcome, detail))
    return report


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for (number, title), outcome, detail in sorted(_RESULTS, key=lambda r: r[0][0]):
        line = f"criterion {number} {outcome:4s} {title}"
        terminalreporter.write_line(f"{line} | {detail}" if detail else line)
