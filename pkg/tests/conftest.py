import pytest

from anyforest.fixtures import example_forest, example_samples

_VERDICTS = []


@pytest.fixture
def example():
    return example_forest(), example_samples()


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line per acceptance criterion, then assert."""

    def record(name, ok, detail=""):
        _VERDICTS.append((name, bool(ok), detail))
        assert ok, f"{name}: {detail}"

    return record


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in _VERDICTS:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")
