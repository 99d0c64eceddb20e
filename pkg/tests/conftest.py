import pytest

_results = []


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): exit criterion of the package")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None or (rep.when != "call" and not rep.failed):
        return
    number, title = marker.args
    _results.append((number, title, rep.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    # a criterion passes only if every test carrying its marker passed
    merged = {}
    for number, title, outcome in _results:
        ok = merged.get(number, (title, True))[1]
        merged[number] = (title, ok and outcome == "passed")
    terminalreporter.section("acceptance criteria")
    for number in sorted(merged):
        title, ok = merged[number]
        word = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"[{word}] criterion {number:>2}: {title}")
