import pytest

# Filled by test_acceptance.py; one line per criterion.
ACCEPTANCE_LINES = []


@pytest.fixture
def criterion(capsys):
    def record(label, passed, detail):
        line = f"criterion {label}: {'PASS' if passed else 'FAIL'} - {detail}"
        ACCEPTANCE_LINES.append(line)
        with capsys.disabled():
            print(f"\n{line}")
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
