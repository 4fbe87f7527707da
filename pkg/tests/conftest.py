import math

import numpy as np
import pytest

from micromaser import MaserConfig, NumberStateMatrix

OMEGA = 2 * math.pi * 21.5e9


def random_density(rng, n_max, headroom=1):
    """Random full-rank-ish density matrix with the top ``headroom`` levels empty."""
    k = n_max + 1 - headroom
    g = rng.normal(size=(k, k)) + 1j * rng.normal(size=(k, k))
    rho = g @ g.conj().T
    rho /= np.trace(rho).real
    out = np.zeros((n_max + 1, n_max + 1), dtype=complex)
    out[:k, :k] = rho
    return NumberStateMatrix(out)


def phase_rotate(rho, chi):
    """``U† rho U`` with ``U = exp(i chi a†a)``."""
    r = np.asarray(rho.entries if isinstance(rho, NumberStateMatrix) else rho)
    u = np.exp(1j * chi * np.arange(r.shape[0]))
    return u.conj()[:, None] * r * u[None, :]


def make_cfg(pump_ratio=0.0, nu=0.0, phi=1.0, decay_A=1.0, n_max=256, omega=OMEGA):
    return MaserConfig.from_pump_ratio(pump_ratio, nu, phi, decay_A=decay_A, omega=omega, n_max=n_max)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
