import pytest

_OUTCOMES: dict[int, list] = {}
_NOTES: dict[int, list] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    n = marker.args[0]
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        status = "xfail" if hasattr(rep, "wasxfail") else rep.outcome
        _OUTCOMES.setdefault(n, []).append((item.name, status))


@pytest.fixture
def note(request):
    """Attach a one-line measurement to the test's criterion summary."""
    n = request.node.get_closest_marker("criterion").args[0]

    def add(text):
        _NOTES.setdefault(n, []).append(text)
    return add


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_OUTCOMES):
        statuses = [s for _, s in _OUTCOMES[n]]
        ok = all(s == "passed" for s in statuses)
        failed = [name for name, s in _OUTCOMES[n] if s != "passed"]
        line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}"
        if failed:
            line += f" (not met: {', '.join(failed)})"
        tr.write_line(line)
        for text in _NOTES.get(n, []):
            tr.write_line(f"    {text}")
