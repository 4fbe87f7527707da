import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from micromaser import (
    DomainError,
    MaserConfig,
    NumberStateMatrix,
    PhotonDistribution,
    decay_rate_from_q,
    statistics,
    thermal_distribution,
    thermal_photon_number,
)
from micromaser.core import HBAR, K_B

from conftest import OMEGA


def test_constants_are_codata():
    assert HBAR == pytest.approx(1.054571817e-34, rel=1e-10)
    assert K_B == pytest.approx(1.380649e-23, rel=1e-10)


@pytest.mark.parametrize("temperature, expected", [(0.5, 0.145), (0.08, 2.5e-6)])
def test_thermal_photon_number_table(temperature, expected):
    assert thermal_photon_number(temperature, OMEGA) == pytest.approx(expected, rel=0.05)


def test_thermal_photon_number_values():
    # direct evaluation of the Bose factor at 0.5 K
    x = 1.054571817e-34 * OMEGA / (1.380649e-23 * 0.5)
    assert thermal_photon_number(0.5, OMEGA) == pytest.approx(1 / (math.exp(x) - 1), rel=1e-14)
    assert 0.0 <= thermal_photon_number(1e-3, OMEGA) < 1e-300


def test_thermal_photon_number_monotone():
    temps = np.geomspace(0.01, 10, 50)
    nus = [thermal_photon_number(t, OMEGA) for t in temps]
    assert np.all(np.diff(nus) > 0)


@pytest.mark.parametrize("temperature, omega", [(0, OMEGA), (-1, OMEGA), (1, 0), (1, -2)])
def test_thermal_photon_number_domain(temperature, omega):
    with pytest.raises(DomainError):
        thermal_photon_number(temperature, omega)


def test_decay_rate_from_q():
    assert decay_rate_from_q(OMEGA, 1e9) == pytest.approx(21.5, rel=1e-14)
    assert decay_rate_from_q(OMEGA, 1e10) == pytest.approx(2.15, rel=1e-14)
    assert decay_rate_from_q(OMEGA, 1e300) < 1e-280
    with pytest.raises(DomainError):
        decay_rate_from_q(OMEGA, 0)
    with pytest.raises(DomainError):
        decay_rate_from_q(-1, 1e9)


def test_thermal_distribution_vacuum_and_geometric():
    assert np.array_equal(thermal_distribution(0.0, 8).probs, [1, 0, 0, 0, 0, 0, 0, 0, 0])
    p = thermal_distribution(1.0, 80).probs
    n = np.arange(81)
    np.testing.assert_allclose(p, 2.0 ** -(n + 1) / (1 - 2.0 ** -81), rtol=1e-13)
    with pytest.raises(DomainError):
        thermal_distribution(-0.1, 8)


def test_thermal_mean_is_nu():
    st_ = statistics(thermal_distribution(1.0, 64))
    assert st_.mean == pytest.approx(1.0, abs=1e-6)
    assert st_.mandel_q == pytest.approx(1.0, abs=1e-6)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.0, 5.0))
def test_thermal_mean_converges_with_truncation(nu):
    n_max = math.ceil(40 * (nu + 1))
    stats = statistics(thermal_distribution(nu, n_max))
    assert abs(stats.mean - nu) < 1e-9
    # Bose-Einstein: variance = nu (nu + 1), so Q = nu
    assert stats.mandel_q == pytest.approx(nu, abs=1e-7)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.05, 20.0))
def test_temperature_round_trip(temperature):
    nu = thermal_photon_number(temperature, OMEGA)
    n_max = math.ceil(40 * (nu + 1))
    assert statistics(thermal_distribution(nu, n_max)).mean == pytest.approx(nu, rel=1e-9, abs=1e-12)


def test_statistics_special_cases():
    vac = statistics(PhotonDistribution.vacuum(4))
    assert (vac.mean, vac.variance, vac.mandel_q, vac.fano) == (0.0, 0.0, 0.0, 1.0)
    fock = statistics(PhotonDistribution.fock(5, 10))
    assert fock.mean == 5 and fock.variance == 0 and fock.mandel_q == -1


def test_purity_bit_identical():
    a = thermal_distribution(0.37, 100).probs
    b = thermal_distribution(0.37, 100).probs
    assert a.tobytes() == b.tobytes()


def test_distribution_clamps_noise_and_rejects_negatives():
    p = PhotonDistribution([0.5, 0.5, -1e-13])
    assert p.probs[2] == 0.0
    with pytest.raises(DomainError):
        PhotonDistribution([0.5, 0.6, -1e-9])


def test_distribution_explicit_normalization():
    p = PhotonDistribution([1.0, 1.0, 2.0])
    assert not p.is_normalized()
    q = p.normalized()
    assert q.is_normalized() and q.probs[2] == 0.5
    with pytest.raises(ValueError):
        p.probs[0] = 3.0


def test_number_state_matrix_hermitian_by_construction():
    m = np.array([[0.5, 0.1 + 0.2j], [0.3, 0.5]])
    rho = NumberStateMatrix(m)
    np.testing.assert_array_equal(rho.entries, rho.entries.conj().T)
    assert rho.trace == pytest.approx(1.0)


def test_coherent_state():
    rho = NumberStateMatrix.coherent(1.2 + 0.5j, 40)
    assert rho.is_normalized()
    assert rho.min_eigenvalue() > -1e-12
    assert statistics(rho.diagonal()).mean == pytest.approx(abs(1.2 + 0.5j) ** 2, rel=1e-10)


@pytest.mark.parametrize(
    "kwargs, name",
    [
        (dict(pump_rate_r=-1.0), "pump_rate_r"),
        (dict(decay_A=0.0), "decay_A"),
        (dict(nu=-0.1), "nu"),
        (dict(n_max=0), "n_max"),
    ],
)
def test_config_validation(kwargs, name):
    base = dict(omega=OMEGA, pump_rate_r=1.0, decay_A=1.0, nu=0.1, phi=1.0, n_max=10)
    base.update(kwargs)
    with pytest.raises(DomainError, match=name):
        MaserConfig(**base)


def test_config_pump_ratio():
    cfg = MaserConfig.from_pump_ratio(50, 0.15, 1.0, decay_A=21.5)
    assert cfg.pump_rate_r == pytest.approx(1075)
    assert cfg.pump_ratio == pytest.approx(50)
