import pytest

_results = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker and rep.when == "call":
        _results.append((marker.args[0], marker.args[1], rep.outcome))
    elif marker and rep.when == "setup" and rep.outcome != "passed":
        _results.append((marker.args[0], marker.args[1], rep.outcome))


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    merged = {}
    for number, title, outcome in _results:
        ok = merged.get(number, (title, True))[1]
        merged[number] = (title, ok and outcome == "passed")
    terminalreporter.section("acceptance criteria")
    for number in sorted(merged):
        title, ok = merged[number]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title}")
