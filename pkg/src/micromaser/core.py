"""Domain types, physical constants and thermal-equilibrium helpers.

Unit conventions used throughout the package:

* angular frequencies in rad/s, rates in 1/s, times in s;
* temperatures in K;
* photon-number distributions and density matrices are indexed
  ``n = 0 .. n_max`` in the truncated Fock space.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# CODATA 2018 (exact in the 2019 SI).
HBAR = 1.054571817e-34  # J s
K_B = 1.380649e-23  # J / K

DEFAULT_N_MAX = 256

# Negative probabilities above this are floating-point noise and get clamped.
NEGATIVE_SLACK = 1e-12
NORM_TOL = 1e-9


class MaserError(Exception):
    """Base class for all errors raised by the package."""


class DomainError(MaserError, ValueError):
    """An argument violates the precondition of an operation."""


class TruncationError(MaserError, ArithmeticError):
    """Probability would leak out of the truncated Fock space."""


class ConvergenceError(MaserError, ArithmeticError):
    """A numerical procedure exceeded its iteration budget."""


def _require(cond, message):
    if not cond:
        raise DomainError(message)


def _frozen(a):
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class MaserConfig:
    """Physical parameters of one maser instance.

    Only ``sin²`` and ``cos²`` of ``phi * sqrt(n + 1)`` enter the physics, so
    ``phi`` is stored exactly as given.
    """

    omega: float
    pump_rate_r: float
    decay_A: float
    nu: float
    phi: float
    n_max: int = DEFAULT_N_MAX

    def __post_init__(self):
        for name in ("omega", "pump_rate_r", "decay_A", "nu", "phi"):
            _require(math.isfinite(getattr(self, name)), f"{name} must be finite")
        _require(self.pump_rate_r >= 0, "pump_rate_r must be >= 0")
        _require(self.decay_A > 0, "decay_A must be > 0")
        _require(self.nu >= 0, "nu must be >= 0")
        _require(int(self.n_max) == self.n_max and self.n_max >= 1, "n_max must be an integer >= 1")
        object.__setattr__(self, "n_max", int(self.n_max))

    @classmethod
    def from_pump_ratio(cls, pump_ratio, nu, phi, decay_A=1.0, omega=2 * math.pi * 21.5e9,
                        n_max=DEFAULT_N_MAX):
        """Build a config from the effective pump rate ``r/A``."""
        _require(math.isfinite(pump_ratio) and pump_ratio >= 0, "pump_ratio must be >= 0")
        return cls(omega=omega, pump_rate_r=pump_ratio * decay_A, decay_A=decay_A,
                   nu=nu, phi=phi, n_max=n_max)

    @property
    def pump_ratio(self):
        """Effective pump rate r/A: pump atoms per photon lifetime."""
        return self.pump_rate_r / self.decay_A


class PhotonDistribution:
    """Probabilities ``p(n)`` for ``n = 0 .. n_max``; the diagonal of a state.

    Entries in ``(-1e-12, 0)`` are clamped to zero, anything more negative is
    rejected.  Normalization is never applied implicitly; call
    :meth:`normalized`.
    """

    __slots__ = ("_probs",)

    def __init__(self, probs):
        p = np.array(probs, dtype=float).reshape(-1)
        _require(p.size >= 2, "distribution needs at least n = 0 and n = 1")
        _require(bool(np.all(np.isfinite(p))), "probabilities must be finite")
        if np.any(p < -NEGATIVE_SLACK):
            n = int(np.argmin(p))
            raise DomainError(f"negative probability p({n}) = {p[n]:.3e}")
        p[p < 0] = 0.0
        self._probs = _frozen(p)

    @property
    def probs(self):
        return self._probs

    @property
    def n_max(self):
        return self._probs.size - 1

    @property
    def total(self):
        return math.fsum(self._probs)

    def is_normalized(self, tol=NORM_TOL):
        return abs(self.total - 1.0) <= tol

    def normalized(self):
        z = self.total
        _require(z > 0, "cannot normalize an all-zero distribution")
        return PhotonDistribution(self._probs / z)

    @classmethod
    def fock(cls, n, n_max=DEFAULT_N_MAX):
        _require(0 <= n <= n_max, f"Fock index {n} outside 0..{n_max}")
        p = np.zeros(n_max + 1)
        p[n] = 1.0
        return cls(p)

    @classmethod
    def vacuum(cls, n_max=DEFAULT_N_MAX):
        return cls.fock(0, n_max)

    def __len__(self):
        return self._probs.size

    def __getitem__(self, n):
        return self._probs[n]

    def __array__(self, dtype=None, copy=None):
        return self._probs if dtype is None else self._probs.astype(dtype)

    def __eq__(self, other):
        return isinstance(other, PhotonDistribution) and np.array_equal(self._probs, other._probs)

    def __hash__(self):
        return hash(self._probs.tobytes())

    def __repr__(self):
        return f"PhotonDistribution(n_max={self.n_max}, mean={statistics(self).mean:.6g})"


class NumberStateMatrix:
    """Density matrix ``rho[n, m] = <n|rho|m>`` on the truncated Fock space.

    The input is Hermitian-symmetrized on construction, so the stored matrix
    is Hermitian exactly.  Trace and positivity are not enforced here.
    """

    __slots__ = ("_rho",)

    def __init__(self, entries):
        rho = np.array(entries, dtype=complex)
        _require(rho.ndim == 2 and rho.shape[0] == rho.shape[1] and rho.shape[0] >= 2,
                 "density matrix must be square with dimension >= 2")
        _require(bool(np.all(np.isfinite(rho))), "density matrix entries must be finite")
        rho = 0.5 * (rho + rho.conj().T)
        self._rho = _frozen(rho)

    @property
    def entries(self):
        return self._rho

    @property
    def n_max(self):
        return self._rho.shape[0] - 1

    @property
    def trace(self):
        return float(np.trace(self._rho).real)

    def is_normalized(self, tol=NORM_TOL):
        return abs(self.trace - 1.0) <= tol

    def normalized(self):
        t = self.trace
        _require(t > 0, "cannot normalize a matrix with non-positive trace")
        return NumberStateMatrix(self._rho / t)

    def diagonal(self):
        """Photon-number distribution carried by the diagonal."""
        return PhotonDistribution(self._rho.diagonal().real)

    def is_diagonal(self):
        return not np.any(self._rho - np.diag(self._rho.diagonal()))

    def min_eigenvalue(self):
        return float(np.linalg.eigvalsh(self._rho)[0])

    @classmethod
    def from_distribution(cls, dist):
        return cls(np.diag(np.asarray(dist.probs, dtype=complex)))

    @classmethod
    def pure(cls, amplitudes):
        """Projector onto the (normalized) vector of Fock amplitudes."""
        psi = np.asarray(amplitudes, dtype=complex)
        norm = np.linalg.norm(psi)
        _require(norm > 0, "state vector must be non-zero")
        psi = psi / norm
        return cls(np.outer(psi, psi.conj()))

    @classmethod
    def coherent(cls, alpha, n_max=DEFAULT_N_MAX):
        """Coherent state truncated at ``n_max`` and renormalized."""
        n = np.arange(n_max + 1)
        if alpha == 0:
            return cls.pure(n == 0)
        log_fact = np.array([math.lgamma(k + 1) for k in n])
        mag = np.exp(-0.5 * abs(alpha) ** 2 + n * math.log(abs(alpha)) - 0.5 * log_fact)
        return cls.pure(mag * np.exp(1j * np.angle(alpha) * n))

    def __array__(self, dtype=None, copy=None):
        return self._rho if dtype is None else self._rho.astype(dtype)

    def __repr__(self):
        return f"NumberStateMatrix(n_max={self.n_max}, trace={self.trace:.6g})"


@dataclass(frozen=True)
class DistributionStats:
    mean: float
    variance: float
    mandel_q: float
    fano: float


def thermal_photon_number(temperature, omega):
    """Bose occupancy ``1 / (exp(hbar omega / k_B T) - 1)`` of the mode.

    >>> round(thermal_photon_number(0.5, 2 * math.pi * 21.5e9), 3)
    0.145
    """
    _require(temperature > 0, "temperature must be > 0")
    _require(omega > 0, "omega must be > 0")
    x = HBAR * omega / (K_B * temperature)
    if x > 700.0:
        return math.exp(-x)  # expm1 would overflow; the occupancy is ~exp(-x)
    return 1.0 / math.expm1(x)


def decay_rate_from_q(omega, quality_q):
    """Energy decay rate ``A = (omega / 2 pi) / Q`` of a resonator of quality Q."""
    _require(omega > 0, "omega must be > 0")
    _require(quality_q > 0, "quality_q must be > 0")
    return omega / (2 * math.pi) / quality_q


def thermal_distribution(nu, n_max=DEFAULT_N_MAX):
    """Geometric distribution ``p(n) ∝ (nu / (nu + 1))**n`` on ``0..n_max``."""
    _require(math.isfinite(nu) and nu >= 0, "nu must be >= 0")
    _require(n_max >= 1, "n_max must be >= 1")
    if nu == 0:
        return PhotonDistribution.vacuum(n_max)
    n = np.arange(n_max + 1)
    p = np.exp(n * math.log(nu / (nu + 1.0))) / (nu + 1.0)
    return PhotonDistribution(p / math.fsum(p))


def statistics(dist):
    p = np.asarray(dist.probs if isinstance(dist, PhotonDistribution) else dist, dtype=float)
    n = np.arange(p.size, dtype=float)
    mean = math.fsum(n * p)
    variance = max(math.fsum((n - mean) ** 2 * p), 0.0)
    if mean == 0:
        return DistributionStats(mean=0.0, variance=variance, mandel_q=0.0, fano=1.0)
    fano = variance / mean
    return DistributionStats(mean=mean, variance=variance, mandel_q=fano - 1.0, fano=fano)


def total_variation(p, q):
    """Total variation distance between two distributions, zero-padding the shorter."""
    a = np.asarray(p, dtype=float)
    b = np.asarray(q, dtype=float)
    size = max(a.size, b.size)
    a = np.pad(a, (0, size - a.size))
    b = np.pad(b, (0, size - b.size))
    return 0.5 * float(np.abs(a - b).sum())
