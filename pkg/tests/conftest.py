import numpy as np
import pytest

from slnqubit.bath import BathSpec
from slnqubit.model import ideal_qubit


@pytest.fixture
def qubit():
    return ideal_qubit()


@pytest.fixture
def fig1_bath():
    return BathSpec(kappa=0.2, omega_c=50.0, beta=5.0)


def excited(n: int = 2) -> np.ndarray:
    rho = np.zeros((n, n), complex)
    rho[1, 1] = 1
    return rho


CRITERIA: dict = {}


def report(n: int, ok: bool, detail: str) -> None:
    """Record and print one pass/fail line for an acceptance criterion."""
    line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    CRITERIA[n] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for n in sorted(CRITERIA):
            terminalreporter.write_line(CRITERIA[n])
