import pytest

from selfadjoint_lab.parsing import Context

ACCEPTANCE_LINES = []


@pytest.fixture
def kdv_ctx():
    return Context.from_declarations("depvar u; depvar v;")


@pytest.fixture
def vckdv_ctx():
    return Context.from_declarations(
        "depvar u; depvar v; func f(t); func g(t); func F(t); link F' = f;"
    )


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
