"""Resonant Jaynes-Cummings interaction of a single atom with the cavity mode.

An atom entering in the upper state with ``n`` photons present leaves behind

    |up, n>  ->  cos(phi sqrt(n+1)) |up, n>  -  i sin(phi sqrt(n+1)) |down, n+1>

where ``phi`` is the accumulated Rabi angle.  The maps below apply this
passage to photon distributions and to full number-state matrices after
tracing out the atom.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    NORM_TOL,
    DomainError,
    NumberStateMatrix,
    PhotonDistribution,
    TruncationError,
)

OVERFLOW_TOL = 1e-12
EIGENVALUE_TOL = 1e-12


@dataclass(frozen=True)
class PassageAmplitudes:
    stay_up: float
    emit_down: complex


@dataclass(frozen=True)
class RabiProfile:
    """Sampled coupling ``g(t)`` seen by an atom crossing a cavity of length L at speed v."""

    times: np.ndarray
    values: np.ndarray
    length_L: float
    speed_v: float

    def __post_init__(self):
        t = np.array(self.times, dtype=float).reshape(-1)
        g = np.array(self.values, dtype=float).reshape(-1)
        if t.size != g.size:
            raise DomainError("times and values must have the same length")
        if t.size < 2:
            raise DomainError("a Rabi profile needs at least 2 samples")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(g))):
            raise DomainError("profile samples must be finite")
        if np.any(np.diff(t) <= 0):
            raise DomainError("profile times must be strictly increasing")
        if np.any(g < 0):
            raise DomainError("Rabi frequency samples must be >= 0")
        if not self.length_L > 0:
            raise DomainError("length_L must be > 0")
        if not self.speed_v > 0:
            raise DomainError("speed_v must be > 0")
        t.setflags(write=False)
        g.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", g)

    @property
    def transit_time(self):
        return self.length_L / self.speed_v


def effective_rabi_angle(profile):
    """Return ``(g_bar, phi)`` for a sampled profile.

    ``phi`` is the trapezoidal integral of ``g(t)``; ``g_bar = phi v / L`` is
    the time average over the classical transit time.
    """
    phi = float(np.trapezoid(profile.values, profile.times))
    return phi * profile.speed_v / profile.length_L, phi


def _check_n(n):
    if np.any(np.asarray(n) < 0):
        raise DomainError("photon number n must be >= 0")


def passage_amplitudes(n, phi):
    _check_n(n)
    theta = phi * math.sqrt(n + 1)
    return PassageAmplitudes(stay_up=math.cos(theta), emit_down=complex(0.0, -math.sin(theta)))


def emission_probability(n, phi):
    """Probability ``sin²(phi sqrt(n+1))`` that the atom leaves deexcited.

    Accepts a scalar or an array of photon numbers.
    """
    _check_n(n)
    s = np.sin(phi * np.sqrt(np.asarray(n, dtype=float) + 1.0))
    out = s * s
    return float(out) if out.ndim == 0 else out


def dressed_phase(gamma_eigenvalue, phi):
    """Phase ``exp(i phi gamma')`` picked up by a dressed bra ``<gamma'|``.

    Only the spectrum of the transition operator, ``0`` and ``±sqrt(n+1)``,
    is accepted.
    """
    g = float(gamma_eigenvalue)
    if abs(g) > EIGENVALUE_TOL:
        k = round(g * g) - 1
        if k < 0 or abs(abs(g) - math.sqrt(k + 1)) > EIGENVALUE_TOL:
            raise DomainError(f"{g!r} is not an eigenvalue 0 or ±sqrt(n+1) of the transition operator")
    else:
        g = 0.0
    return complex(math.cos(phi * g), math.sin(phi * g))


def _require_normalized(total, what):
    if abs(total - 1.0) > NORM_TOL:
        raise DomainError(f"{what} must be normalized (total = {total!r})")


def _check_overflow(p_top, phi, n_max):
    leak = math.sin(phi * math.sqrt(n_max + 1)) ** 2 * p_top
    if leak > OVERFLOW_TOL:
        raise TruncationError(
            f"up-kick leaks {leak:.3e} of probability past n_max = {n_max}; increase n_max"
        )


def _kick_up_array(p, phi):
    n = np.arange(p.size, dtype=float)
    s2 = np.sin(phi * np.sqrt(n + 1.0)) ** 2
    out = (1.0 - s2) * p
    out[1:] += s2[:-1] * p[:-1]
    return out


def pump_kick_up(dist, phi):
    """Diagonal state after one atom entering in the upper state has crossed."""
    p = np.asarray(dist.probs)
    _require_normalized(dist.total, "distribution")
    _check_overflow(p[-1], phi, p.size - 1)
    return PhotonDistribution(_kick_up_array(p, phi))


def pump_kick_down(dist, phi):
    """Diagonal state after one atom entering in the lower state (absorber) has crossed."""
    p = np.asarray(dist.probs)
    _require_normalized(dist.total, "distribution")
    n = np.arange(p.size, dtype=float)
    s2 = np.sin(phi * np.sqrt(n)) ** 2
    out = (1.0 - s2) * p
    out[:-1] += s2[1:] * p[1:]
    return PhotonDistribution(out)


def _gain_map(rho, phi, reflect=False):
    """``C rho C + S† rho S`` on a raw matrix.

    With ``reflect`` the truncated ladder operator is used, i.e. no amplitude
    is removed from ``n_max``; this keeps truncated generators trace
    preserving.
    """
    size = rho.shape[0]
    n = np.arange(size, dtype=float)
    c = np.cos(phi * np.sqrt(n + 1.0))
    if reflect:
        c[-1] = 1.0
    s = np.sin(phi * np.sqrt(n))
    out = c[:, None] * rho * c[None, :]
    out[1:, 1:] += s[1:, None] * rho[:-1, :-1] * s[None, 1:]
    return out


def gain_superoperator_full(rho, phi):
    """Field state after one upper-state atom has crossed, atom traced out."""
    r = np.asarray(rho.entries)
    _require_normalized(rho.trace, "density matrix")
    _check_overflow(r[-1, -1].real, phi, r.shape[0] - 1)
    return NumberStateMatrix(_gain_map(r, phi))
