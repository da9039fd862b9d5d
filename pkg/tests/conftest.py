import pytest

ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE] = []


@pytest.fixture
def verdict(request, capsys):
    """Record one PASS/FAIL line; lines are echoed live and in the summary."""
    def _record(number, ok, text):
        line = f"{'PASS' if ok else 'FAIL'}: criterion {number}: {text}"
        request.config.stash[ACCEPTANCE].append(line)
        with capsys.disabled():
            print(f"\n{line}")
        return ok
    return _record


@pytest.fixture
def diagnostic(request, capsys):
    def _record(text):
        line = f"DIAGNOSTIC: {text}"
        request.config.stash[ACCEPTANCE].append(line)
        with capsys.disabled():
            print(f"\n{line}")
    return _record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
