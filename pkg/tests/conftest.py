import pytest

_ACCEPTANCE = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when != "call":
        return
    measured = dict(report.user_properties).get("measured", "")
    _ACCEPTANCE.append((marker.args[0], report.passed, measured))


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(label): acceptance criterion reported in the summary")


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label, ok, measured in _ACCEPTANCE:
        line = f"{'PASS' if ok else 'FAIL'}  {label}"
        if measured:
            line += f"  [{measured}]"
        terminalreporter.write_line(line)
