import numpy as np
import pytest

from fcstt.fcsprop import ExactPropagator
from fcstt.freefermion import FreeFermionPropagator, build_resonant_level_quadratic
from fcstt.models import build_anderson, preset


@pytest.fixture(scope="session")
def rl_model():
    return build_anderson(preset("resonant-level-small"))


@pytest.fixture(scope="session")
def rl_prop(rl_model):
    return ExactPropagator(rl_model)


@pytest.fixture(scope="session")
def anderson_prop():
    return ExactPropagator(build_anderson(preset("anderson-paper")))


@pytest.fixture(scope="session")
def wide_prop():
    return FreeFermionPropagator(build_resonant_level_quadratic(preset("resonant-level-wide")))


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


def rand_herm(rng, n):
    x = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return (x + x.conj().T) / 2


def rand_density(rng, n):
    x = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    rho = x @ x.conj().T
    return rho / np.trace(rho)


_ACCEPTANCE = []


@pytest.fixture
def criterion():
    """Record one acceptance line and fail the test if it did not pass."""
    def record(label, passed, detail):
        passed = bool(passed)
        _ACCEPTANCE.append(f"{'PASS' if passed else 'FAIL'}  {label}: {detail}")
        assert passed, f"{label}: {detail}"
    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
