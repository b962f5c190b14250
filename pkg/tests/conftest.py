import numpy as np
import pytest

from lhmip.css_code import steane
from lhmip.hamiltonians import XZHamiltonian


@pytest.fixture(scope="session")
def code():
    return steane()


@pytest.fixture(scope="session")
def h_z():
    return XZHamiltonian.parse(1, [(1.0, "Z")])


@pytest.fixture(scope="session")
def h_xxzz():
    return XZHamiltonian.parse(2, [(1.0, "XX"), (1.0, "ZZ")])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    lines = []
    for reports in terminalreporter.stats.values():
        for rep in reports:
            if getattr(rep, "when", None) != "call":
                continue
            lines += [v for k, v in getattr(rep, "user_properties", []) if k == "acceptance"]
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
