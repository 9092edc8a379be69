from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

# criterion number -> (title, outcomes, measured details)
_RESULTS: dict[int, tuple[str, list[str], list[str]]] = {}


def pytest_configure(config: pytest.Config) -> None:
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by this test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item: pytest.Item, call: pytest.CallInfo):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    entry = _RESULTS.setdefault(number, (title, [], []))
    if report.when == "call":
        entry[1].append("PASS" if report.passed else "SKIP" if report.skipped else "FAIL")
        entry[2].extend(str(v) for k, v in item.user_properties if k == "measured")
    elif report.when == "setup" and not report.passed:
        entry[1].append("SKIP" if report.skipped else "FAIL")


def pytest_terminal_summary(terminalreporter, exitstatus: int, config: pytest.Config) -> None:
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        title, outcomes, details = _RESULTS[number]
        if "FAIL" in outcomes:
            status = "FAIL"
        elif outcomes and all(o == "SKIP" for o in outcomes):
            status = "SKIP"
        else:
            status = "PASS"
        terminalreporter.write_line(f"[{status}] criterion {number:2d}: {title} ({len(outcomes)} test(s))")
        for d in details:
            terminalreporter.write_line(f"           {d}")
