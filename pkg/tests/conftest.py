import pytest

from torsorcount.qfield import FieldCtx


@pytest.fixture(scope="session")
def Qi():
    return FieldCtx(-1)


@pytest.fixture(scope="session")
def Qw():
    return FieldCtx(-3)


@pytest.fixture(scope="session")
def Q5():
    return FieldCtx(-5)


ACCEPTANCE: dict[int, str] = {}


def record(criterion: int, ok: bool, detail: str) -> None:
    """Store the one-line verdict printed after the run."""
    ACCEPTANCE[criterion] = f"criterion {criterion}: {'PASS' if ok else 'FAIL'}  {detail}"


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[k])
