from __future__ import annotations

import numpy as np
import pytest

from friedrichs import GridSpec, SinPhi, mu0, standard_model

WATSON = 1.516386059151978
LAMBDA00 = (2.0 * np.pi) ** 3 * WATSON / 6.0


@pytest.fixture(scope="session")
def std():
    return standard_model()


@pytest.fixture(scope="session")
def mu_c(std):
    return mu0(std, GridSpec(64))


@pytest.fixture(scope="session")
def resonant(std, mu_c):
    return std.with_mu(mu_c)


@pytest.fixture(scope="session")
def odd_critical():
    spec = standard_model(phi=SinPhi(1))
    return spec.with_mu(mu0(spec, GridSpec(64)))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
