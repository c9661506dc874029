import numpy as np
import pytest

from distgeo.scenario import builtin_fixture

# filled by test_acceptance; printed once at the end of the session
ACCEPTANCE = {}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def fixtures():
    return {name: builtin_fixture(name) for name in ("FLAT2", "HEIS", "SPHERE", "KNIFE")}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        ok, title, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"AC{key:02d} {'PASS' if ok else 'FAIL'}  {title}: {detail}")
