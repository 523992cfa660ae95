import numpy as np
import pytest

from skyrmion import spectrum, static


@pytest.fixture(scope="session")
def profile():
    return static.solve_skyrmion()


@pytest.fixture(scope="session")
def potential(profile):
    return spectrum.effective_potential(profile)


@pytest.fixture(scope="session")
def fundamental_mode(potential):
    return spectrum.find_qnm(potential)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


_ACCEPTANCE_LINES = {}


@pytest.fixture(scope="session")
def acceptance():
    """Record one PASS/FAIL line per acceptance criterion; echoed at the end of the run."""

    def record(number, ok, detail):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        _ACCEPTANCE_LINES[number] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for key in sorted(_ACCEPTANCE_LINES):
            terminalreporter.write_line(_ACCEPTANCE_LINES[key])
