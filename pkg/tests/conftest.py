"""Acceptance bookkeeping: one pass/fail line per criterion at the end of the run."""

import pytest

_RESULTS = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(name): acceptance criterion checked by this test")


def _criterion(item):
    marker = item.get_closest_marker("criterion")
    return marker.args[0] if marker else None


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    name = _criterion(item)
    if name is None:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        if report.skipped:
            status = "SKIP"
        elif report.failed:
            status = "FAIL"
        else:
            status = "PASS"
        detail = dict(item.user_properties).get("detail", "")
        if dict(item.user_properties).get("soft_fail"):
            status = "WARN"
        _RESULTS[name] = (status, detail)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, (status, detail) in _RESULTS.items():
        line = f"{status:<4s}  {name}"
        if detail:
            line += f"  [{detail}]"
        terminalreporter.write_line(line)
