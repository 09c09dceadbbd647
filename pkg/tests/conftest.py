import pytest

from fastvisco import fem
from fastvisco.bench import setup_problem

# filled by the acceptance tests, printed once at the end of the session
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])


@pytest.fixture(scope="session")
def example_material():
    return fem.MaterialModel()


@pytest.fixture(scope="session")
def disc8(example_material):
    return setup_problem(8, example_material)


@pytest.fixture(scope="session")
def disc4(example_material):
    return setup_problem(4, example_material)
