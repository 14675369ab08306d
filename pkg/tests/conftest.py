import pytest

_LINES = pytest.StashKey[list]()


class Recorder:
    """Collects one PASS/FAIL line per acceptance criterion."""

    def __init__(self, lines):
        self.lines = lines

    def __call__(self, number, ok, detail=""):
        line = f"ACCEPTANCE {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}".rstrip()
        self.lines.append(line)
        print(line)
        assert ok, line


def pytest_configure(config):
    config.stash[_LINES] = []


@pytest.fixture
def acceptance(request):
    return Recorder(request.config.stash[_LINES])


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
