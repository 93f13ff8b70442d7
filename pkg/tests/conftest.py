import numpy as np
import pytest

from optdesign.model import ModelSpec

STANDARD = ([(1, n) for n in range(3, 10)] + [(2, n) for n in range(6, 13)]
            + [(3, n) for n in range(10, 17)])


def random_design(spec: ModelSpec, rng) -> np.ndarray:
    return rng.uniform(-1.0, 1.0, size=(spec.n, spec.k))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def k1_opt():
    return ModelSpec(1, 3), np.array([[-1.0], [0.0], [1.0]])


# -- acceptance reporting ------------------------------------------------------

ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture
def acceptance_report():
    """Record one PASS/FAIL line per exit criterion; printed in the terminal summary."""

    def report(number: int, passed: bool, detail: str) -> bool:
        ACCEPTANCE_LINES[number] = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
        return passed

    return report


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[number])
