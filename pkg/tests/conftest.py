import pytest

_LINES = {}


class Recorder:
    def __call__(self, number, title, passed, detail=""):
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:>2}: {title}"
        if detail:
            line += f" ({detail})"
        _LINES[number] = line
        print(line)
        return passed


@pytest.fixture
def acceptance():
    return Recorder()


def pytest_terminal_summary(terminalreporter):
    if not _LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_LINES):
        terminalreporter.write_line(_LINES[n])
