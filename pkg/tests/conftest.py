import numpy as np
import pytest

from nonclassicality.fock_core import PureState
from nonclassicality.states import loss_channel, prepare_pure, rho_p

BATTERY_SPECS = ["fock:1", "fock:2", "cat:+:1", "cat:-:1", "sqvac:0.5", "sqvac:0.5:1"]


def battery():
    """Eight test states: six pure constructors, one mixture, one lossy cat."""
    states = {s: prepare_pure(s) for s in BATTERY_SPECS}
    states["rho_p:0.75"] = rho_p(0.75)
    states["lossy_cat:2:0.9"] = loss_channel(prepare_pure("cat:+:2"), 0.9)
    return states


def random_pure(rng, occupied, dim=None):
    """Random pure state on the lowest ``occupied`` levels, padded to ``dim``."""
    dim = dim or occupied + 4
    v = np.zeros(dim, dtype=complex)
    v[:occupied] = rng.normal(size=occupied) + 1j * rng.normal(size=occupied)
    return PureState.normalized(v)


@pytest.fixture(scope="session")
def battery_states():
    return battery()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(RESULTS):
            terminalreporter.write_line(line)
