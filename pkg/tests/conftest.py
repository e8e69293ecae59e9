"""Prints one PASS/FAIL line per acceptance criterion after the run.

Acceptance tests carry ``@pytest.mark.acceptance(n, "title")``; the marker
is copied into the test report so the summary hook can group by criterion.
"""

import pytest

_RESULTS = {}


@pytest.fixture(autouse=True)
def _acceptance_properties(request, record_property):
    marker = request.node.get_closest_marker("acceptance")
    if marker is not None:
        record_property("criterion", marker.args[0])
        record_property("title", marker.args[1])


def pytest_runtest_logreport(report):
    props = dict(report.user_properties)
    if "criterion" not in props:
        return
    key = props["criterion"]
    title, status, duration = _RESULTS.get(key, (props["title"], "PASS", 0.0))
    if report.failed:
        status = "FAIL"
    if report.when == "call":
        duration += report.duration
    _RESULTS[key] = (title, status, duration)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_RESULTS):
        title, status, duration = _RESULTS[key]
        terminalreporter.write_line(f"criterion {key:>2}: {status}  {title} ({duration:.1f} s)")
