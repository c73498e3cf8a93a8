import re

import pytest

from rma.columnar import SORT_STATS

_CRITERIA: dict[int, tuple[str, list[bool]]] = {}


@pytest.fixture(autouse=True)
def _reset_sort_stats():
    SORT_STATS.reset()
    yield


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    m = re.match(r"test_criterion_(\d+)_(\w+?)(\[.*\])?$", item.name)
    if m is None or report.when != "call" and not report.failed:
        return
    label, results = _CRITERIA.setdefault(int(m.group(1)), (m.group(2).replace("_", " "), []))
    results.append(report.passed)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        label, results = _CRITERIA[number]
        verdict = "PASS" if results and all(results) else "FAIL"
        terminalreporter.write_line(f"criterion {number}: {verdict}  {label}")
