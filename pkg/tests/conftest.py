import pytest

from ccrbrane.quadrature import QuadratureSpec

ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture(scope="session")
def fast_quad():
    return QuadratureSpec(scheme="polar", order=24, angular=96, tol=1e-8)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
