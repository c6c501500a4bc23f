import sys
from collections import defaultdict
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_criteria = defaultdict(list)
_extra = defaultdict(list)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    failed = report.failed
    if report.when != "call" and not failed:
        return
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        message = ""
        if failed and call.excinfo is not None:
            message = call.excinfo.exconly().splitlines()[0]
        _criteria[marker.args[0]].append((item.name, failed, message))
    marker = item.get_closest_marker("supplementary")
    if marker is not None:
        _extra[marker.args[0]].append((item.name, failed, ""))


def pytest_terminal_summary(terminalreporter):
    if not _criteria and not _extra:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_criteria):
        results = _criteria[number]
        bad = [r for r in results if r[1]]
        status = "FAIL" if bad else "PASS"
        tr.write_line(f"criterion {number:>2}: {status}  ({len(results) - len(bad)}/{len(results)} checks)")
        for name, _, text in bad:
            tr.write_line(f"    {name}: {text[:320]}")
    for label in sorted(_extra):
        results = _extra[label]
        status = "FAIL" if any(r[1] for r in results) else "PASS"
        tr.write_line(f"supplementary {label}: {status}  ({len(results)} checks)")
