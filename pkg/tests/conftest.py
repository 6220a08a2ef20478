import math

import numpy as np
import pytest

from naqrl.environment import ActionUnitary, EnvironmentSpec, Observable
from naqrl.statevector import I2, X, Z, StateVector

SQ2 = 1 / math.sqrt(2)


def ix_env(gamma=0.9, horizon=10, noise_p=0.0):
    """Actions {I, X} with reward Z on one qubit, starting in |0>."""
    return EnvironmentSpec(1, (ActionUnitary("I", I2), ActionUnitary("X", X)), Observable(Z),
                           gamma, noise_p=noise_p, horizon=horizon)


def random_state(n, rng):
    v = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    return StateVector(v, normalize=True)


def random_unitary(d, rng):
    q, r = np.linalg.qr(rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_hermitian(d, rng):
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return a + a.conj().T


@pytest.fixture
def rng():
    return np.random.default_rng(20261015)


@pytest.fixture
def plus():
    return StateVector([SQ2, SQ2])


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
