"""Coarse-grained master equation of the one-atom maser and its integration.

The generator is the sum of the free rotation ``-i omega [a†a, rho]``, the
pump gain ``r (G(rho) - rho)`` with ``G`` the single-atom passage map, and
the thermal loss terms at rate ``A`` with ``nu`` thermal photons.

In the truncated space ``0..n_max`` the ladder operators are truncated as
well: no rate leads out of ``n_max``.  This keeps every generator exactly
trace preserving; the truncation guard makes sure the neglected flux is
negligible.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import (
    ConvergenceError,
    DomainError,
    NumberStateMatrix,
    PhotonDistribution,
    TruncationError,
    statistics,
)
from .jcm import _gain_map

TRUNCATION_GUARD = 1e-10
DEFAULT_MAX_STEPS = 10**8


def _guard(p_top, n_max, cfg):
    """Raise when the flux that truncation neglects at ``n_max`` is not negligible."""
    pump = math.sin(cfg.phi * math.sqrt(n_max + 1)) ** 2 * p_top if cfg.pump_rate_r > 0 else 0.0
    thermal = cfg.nu * (n_max + 1) * p_top
    if pump > TRUNCATION_GUARD or thermal > TRUNCATION_GUARD:
        raise TruncationError(
            f"population p({n_max}) = {p_top:.3e} would flow past n_max = {n_max}; increase n_max"
        )


def _rates(size, cfg):
    n = np.arange(size, dtype=float)
    up = cfg.pump_rate_r * np.sin(cfg.phi * np.sqrt(n + 1.0)) ** 2 + cfg.decay_A * cfg.nu * (n + 1.0)
    up[-1] = 0.0
    down = cfg.decay_A * (cfg.nu + 1.0) * n
    return up, down


def _diag_rhs(p, up, down):
    out = -(up + down) * p
    out[1:] += up[:-1] * p[:-1]
    out[:-1] += down[1:] * p[1:]
    return out


def diagonal_rhs(dist, cfg):
    """Time derivative of a diagonal state, ``dp/dt`` in 1/s.

    Implements the six gain and loss fluxes between neighbouring photon
    numbers.  The truncation follows ``len(dist)``, not ``cfg.n_max``.
    """
    p = np.asarray(dist.probs if isinstance(dist, PhotonDistribution) else dist, dtype=float)
    _guard(p[-1], p.size - 1, cfg)
    up, down = _rates(p.size, cfg)
    return _diag_rhs(p, up, down)


class _FullGenerator:
    def __init__(self, size, cfg, rotating_frame):
        n = np.arange(size, dtype=float)
        self.cfg = cfg
        A, nu = cfg.decay_A, cfg.nu
        u = n + 1.0  # truncated a a†
        u[-1] = 0.0
        diag = -0.5 * A * (nu + 1.0) * (n[:, None] + n[None, :]) - 0.5 * A * nu * (u[:, None] + u[None, :])
        if not rotating_frame:
            diag = diag - 1j * cfg.omega * (n[:, None] - n[None, :])
        self.diag = diag
        sq = np.sqrt(n)
        self.lower = A * (nu + 1.0) * np.outer(sq[1:], sq[1:])  # a rho a†
        self.raise_ = A * nu * np.outer(sq[1:], sq[1:])  # a† rho a

    def __call__(self, rho):
        out = self.diag * rho
        out[:-1, :-1] += self.lower * rho[1:, 1:]
        out[1:, 1:] += self.raise_ * rho[:-1, :-1]
        r = self.cfg.pump_rate_r
        if r:
            out += r * (_gain_map(rho, self.cfg.phi, reflect=True) - rho)
        return out


def full_rhs(rho, cfg, rotating_frame=False):
    """Time derivative of a full number-state matrix.

    With ``rotating_frame`` the free term ``-i omega [a†a, rho]`` is dropped
    (interaction picture); functions of ``a†a`` are unaffected either way.
    """
    r = np.asarray(rho.entries if isinstance(rho, NumberStateMatrix) else rho, dtype=complex)
    _guard(r[-1, -1].real, r.shape[0] - 1, cfg)
    return _FullGenerator(r.shape[0], cfg, rotating_frame)(r)


def mean_field(rho):
    """Mean field amplitude ``<a> = tr(a rho) = sum_n sqrt(n+1) rho[n+1, n]``."""
    r = np.asarray(rho.entries if isinstance(rho, NumberStateMatrix) else rho)
    n = np.arange(1, r.shape[0])
    return complex(np.sum(np.sqrt(n) * np.diagonal(r, offset=-1)))


def unpumped_mean_number(n0, cfg, t):
    if t < 0:
        raise DomainError("t must be >= 0")
    return cfg.nu + (n0 - cfg.nu) * math.exp(-cfg.decay_A * t)


def unpumped_mean_field(alpha0, cfg, t):
    if t < 0:
        raise DomainError("t must be >= 0")
    return complex(alpha0) * np.exp(-1j * cfg.omega * t) * math.exp(-0.5 * cfg.decay_A * t)


@dataclass(frozen=True)
class EvolutionResult:
    """Output of :func:`integrate`.

    ``populations[i]`` is the diagonal at ``times[i]``.  ``mean_field`` is
    ``None`` for diagonal integrations.  ``trace_drift`` is ``trace - 1`` of
    the final state before it was renormalized for output.
    """

    final_state: object
    times: np.ndarray
    mean_n: np.ndarray
    mean_field: Optional[np.ndarray]
    populations: np.ndarray
    steps_taken: int
    rejected_steps: int
    trace_drift: float


def _rk4(f, y, h):
    k1 = f(y)
    k2 = f(y + 0.5 * h * k1)
    k3 = f(y + 0.5 * h * k2)
    k4 = f(y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def initial_step(cfg, n_max):
    """Step-size seed ``0.1 / fastest rate`` of the generator."""
    return 0.1 / (cfg.decay_A * (cfg.nu + 1.0) * (n_max + 1) + cfg.pump_rate_r)


# The RK4 stability region contains the closed left half-disc of radius 2.6.
_RK4_STABLE_RADIUS = 2.5


def stability_step(cfg, n_max, full=False, rotating_frame=False):
    """Largest step keeping every mode of the truncated generator RK4-stable.

    Uses a Gershgorin bound on the spectral radius.  Without this cap the
    error controller lets the step drift to the stability edge, where noise
    of the size of the tolerance builds up at high photon numbers.
    """
    up, down = _rates(n_max + 1, cfg)
    radius = 2.0 * float(np.max(up + down))
    if full:
        radius += 2.0 * cfg.pump_rate_r
        if not rotating_frame:
            radius += abs(cfg.omega) * n_max
    return _RK4_STABLE_RADIUS / radius if radius > 0 else math.inf


def integrate(initial, cfg, duration, rel_tol=1e-8, *, t_eval=None, step=None,
              max_steps=DEFAULT_MAX_STEPS, rotating_frame=False):
    """Integrate the master equation from ``initial`` for ``duration`` seconds.

    Classical fourth-order Runge-Kutta.  By default the step is controlled by
    step doubling: a full step is compared with two half steps and accepted
    (the half-step result is kept) when their difference, divided by 15, is
    below ``rel_tol`` relative to the unit trace.  Adaptive steps are capped
    at :func:`stability_step`.  Passing ``step`` switches to fixed steps of
    that size with no error control and no cap.

    Parameters
    ----------
    initial : PhotonDistribution or NumberStateMatrix
        A diagonal state is integrated with the diagonal equation only.
    t_eval : sequence of float, optional
        Times in ``[0, duration]`` at which to record observables; defaults
        to ``[0, duration]``.  The integrator lands on every one exactly.
    max_steps : int
        Ceiling on attempted steps before :class:`ConvergenceError`.
    """
    if not (duration >= 0 and math.isfinite(duration)):
        raise DomainError("duration must be >= 0")
    if step is None and not (1e-12 <= rel_tol <= 1e-3):
        raise DomainError("rel_tol must lie in [1e-12, 1e-3]")
    if step is not None and not step > 0:
        raise DomainError("step must be > 0")

    full = isinstance(initial, NumberStateMatrix)
    if full:
        y = np.array(initial.entries, dtype=complex)
        size = y.shape[0]
        gen = _FullGenerator(size, cfg, rotating_frame)

        def f(x):
            _guard(x[-1, -1].real, size - 1, cfg)
            return gen(x)

        diag_of = lambda x: x.diagonal().real.copy()  # noqa: E731
        trace_of = lambda x: float(np.trace(x).real)  # noqa: E731
    elif isinstance(initial, PhotonDistribution):
        y = np.array(initial.probs, dtype=float)
        size = y.size
        up, down = _rates(size, cfg)

        def f(x):
            _guard(x[-1], size - 1, cfg)
            return _diag_rhs(x, up, down)

        diag_of = lambda x: x.copy()  # noqa: E731
        trace_of = lambda x: math.fsum(x)  # noqa: E731
    else:
        raise DomainError("initial must be a PhotonDistribution or NumberStateMatrix")
    if abs(trace_of(y) - 1.0) > 1e-8:
        raise DomainError("initial state must be normalized")

    outputs = np.unique(np.asarray([0.0, duration] if t_eval is None else t_eval, dtype=float))
    if outputs.size and (outputs[0] < 0 or outputs[-1] > duration):
        raise DomainError("t_eval must lie within [0, duration]")

    times, means, fields, pops = [], [], [], []

    def record(t, x):
        d = diag_of(x)
        times.append(t)
        pops.append(d)
        means.append(statistics(np.clip(d, 0.0, None)).mean)
        if full:
            fields.append(mean_field(x))

    t = 0.0
    h_cap = stability_step(cfg, size - 1, full, rotating_frame)
    h = step if step is not None else min(initial_step(cfg, size - 1), h_cap)
    accepted = rejected = 0
    out_idx = 0
    while out_idx < outputs.size and outputs[out_idx] <= 0.0:
        record(0.0, y)
        out_idx += 1
    while out_idx < outputs.size:
        target = outputs[out_idx]
        if accepted + rejected >= max_steps:
            raise ConvergenceError(f"no convergence within {max_steps} steps (t = {t:.6g} s)")
        landing = target - t <= h * (1.0 + 1e-12)
        h_try = target - t if landing else h
        if step is not None:
            y = _rk4(f, y, h_try)
            accepted += 1
        else:
            y_full = _rk4(f, y, h_try)
            y_half = _rk4(f, _rk4(f, y, 0.5 * h_try), 0.5 * h_try)
            err = float(np.max(np.abs(y_half - y_full))) / 15.0
            factor = 4.0 if err == 0 else min(4.0, max(0.2, 0.9 * (rel_tol / err) ** 0.2))
            if err > rel_tol:
                rejected += 1
                h = min(h_try * factor, h_cap)
                continue
            accepted += 1
            y = y_half
            if not landing or factor < 1.0:
                h = min(h_try * factor, h_cap)
        t = target if landing else t + h_try
        while out_idx < outputs.size and outputs[out_idx] <= t:
            record(outputs[out_idx], y)
            out_idx += 1

    drift = trace_of(y) - 1.0
    if full:
        final = NumberStateMatrix(y).normalized()
    else:
        final = PhotonDistribution(y).normalized()
    return EvolutionResult(
        final_state=final,
        times=np.asarray(times),
        mean_n=np.asarray(means),
        mean_field=np.asarray(fields) if full else None,
        populations=np.asarray(pops),
        steps_taken=accepted,
        rejected_steps=rejected,
        trace_drift=drift,
    )
