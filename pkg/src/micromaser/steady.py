"""Steady state of the one-atom maser and what follows from it.

In steady state the probability flux between neighbouring photon numbers
balances pairwise, which gives the closed form

    p(n) = p(0) * prod_{k=1..n} [ nu/(nu+1) + (r/A)/(nu+1) * sin²(phi sqrt k) / k ].

The product is evaluated in the log domain.  A factor that vanishes because
``phi sqrt k`` sits on a multiple of pi (a trapped state, only possible for
``nu = 0``) cuts the support off exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import (
    DistributionStats,
    DomainError,
    MaserConfig,
    MaserError,
    PhotonDistribution,
    TruncationError,
    statistics,
)

TRAP_TOL = 1e-9
TAIL_TOL = 1e-12
MAX_AUTO_N_MAX = 4096
RESIDUAL_TOL = 1e-10


def _emission_weights(phi, k, trap_tol):
    """``sin²(phi sqrt k)``; exactly 0 within ``trap_tol`` rad of a multiple of pi."""
    theta = phi * np.sqrt(np.asarray(k, dtype=float))
    s2 = np.sin(theta) ** 2
    if trap_tol > 0:
        s2[np.abs(theta - np.pi * np.round(theta / np.pi)) < trap_tol] = 0.0
    return s2


def pump_factors(cfg, n_max=None, trap_tol=TRAP_TOL):
    """Ratios ``p(k) / p(k-1)`` for ``k = 1..n_max``."""
    n_max = cfg.n_max if n_max is None else n_max
    k = np.arange(1, n_max + 1, dtype=float)
    nu = cfg.nu
    s2 = _emission_weights(cfg.phi, k, trap_tol)
    return nu / (nu + 1.0) + cfg.pump_ratio / (nu + 1.0) * s2 / k


def _compensated_cumsum(x):
    out = np.empty(len(x))
    total = 0.0
    comp = 0.0
    for i, v in enumerate(x):
        t = total + v
        if abs(total) >= abs(v):
            comp += (total - t) + v
        else:
            comp += (v - t) + total
        total = t
        out[i] = total + comp
    return out


def _check_tail(p, n_max):
    peak = p.max()
    if p[-1] >= TAIL_TOL * peak:
        raise TruncationError(
            f"steady state not contained in n <= {n_max}: p(n_max) / max p = {p[-1] / peak:.3e}"
        )


def _product_state(cfg, n_max, trap_tol):
    f = pump_factors(cfg, n_max, trap_tol)
    zero = np.flatnonzero(f == 0.0)
    cut = int(zero[0]) if zero.size else n_max  # support is 0..cut
    logs = np.zeros(n_max + 1)
    logs[1:cut + 1] = _compensated_cumsum(np.log(f[:cut]))
    p = np.zeros(n_max + 1)
    p[:cut + 1] = np.exp(logs[:cut + 1] - logs[:cut + 1].max())
    return p / math.fsum(p)


def _auto_escalate(solver, cfg, trap_tol, auto_extend):
    n_max = cfg.n_max
    while True:
        p = solver(cfg, n_max, trap_tol)
        try:
            _check_tail(p, n_max)
            return PhotonDistribution(p)
        except TruncationError:
            if not auto_extend or n_max >= MAX_AUTO_N_MAX:
                raise
            n_max = min(2 * n_max, MAX_AUTO_N_MAX)


def steady_state(cfg, trap_tol=TRAP_TOL, auto_extend=True):
    """Steady-state photon distribution from the closed-form product.

    When the tail at ``cfg.n_max`` is not negligible (``p(n_max)`` at least
    ``1e-12`` of the peak) the truncation is doubled, up to 4096, before
    :class:`TruncationError` is raised.  The returned distribution may hence
    be longer than ``cfg.n_max + 1``.
    """
    return _auto_escalate(_product_state, cfg, trap_tol, auto_extend)


def _recurrence_state(cfg, n_max, trap_tol):
    r, A, nu = cfg.pump_rate_r, cfg.decay_A, cfg.nu
    p = np.zeros(n_max + 1)
    p[0] = 1.0
    for n in range(1, n_max + 1):
        s2 = _emission_weights(cfg.phi, [n], trap_tol)[0]
        p[n] = p[n - 1] * (r * s2 + A * nu * n) / (A * (nu + 1.0) * n)
        if p[n] == 0.0:
            break
        if p[n] > 1e250:
            p[: n + 1] /= p[n]
    return p / math.fsum(p)


def recurrence_steady_state(cfg, trap_tol=TRAP_TOL, auto_extend=True):
    """Steady state by forward iteration of the two-term balance relation."""
    return _auto_escalate(_recurrence_state, cfg, trap_tol, auto_extend)


def detailed_balance_residual(dist, cfg):
    """Largest violation of ``A(nu+1) n p(n) = (r sin²(phi sqrt n) + A nu n) p(n-1)``.

    Scaled by ``A (nu + 1)`` so the result is a probability.
    """
    p = np.asarray(dist.probs, dtype=float)
    A, nu = cfg.decay_A, cfg.nu
    n = np.arange(1, p.size, dtype=float)
    down = A * (nu + 1.0) * n * p[1:]
    up = (cfg.pump_rate_r * np.sin(cfg.phi * np.sqrt(n)) ** 2 + A * nu * n) * p[:-1]
    return float(np.max(np.abs(down - up))) / (A * (nu + 1.0))


def trapped_state_numbers(phi, n_max, tol=TRAP_TOL):
    """Photon numbers ``n <= n_max`` with ``phi sqrt(n+1)`` within ``tol`` of ``q pi``.

    Returns ``[(n, q), ...]`` in ascending ``n``.
    """
    if phi == 0:
        raise DomainError("phi must be non-zero: with phi = 0 no state ever emits")
    if not (0 < tol <= 0.1):
        raise DomainError("tol must lie in (0, 0.1]")
    a = abs(phi)
    out = []
    q = 1
    while True:
        # candidates around the exact solution n + 1 = (q pi / phi)²
        x = (q * math.pi / a) ** 2 - 1
        if math.floor(x) > n_max + 1 and (q * math.pi - a * math.sqrt(n_max + 1)) > tol:
            break
        for n in {math.floor(x), math.ceil(x)}:
            if 0 <= n <= n_max and abs(a * math.sqrt(n + 1) - q * math.pi) < tol:
                out.append((n, q))
        q += 1
    return sorted(set(out))


def atom_exit_statistics(dist, phi):
    """``(p_down, p_up)`` for the next upper-state atom crossing a field in ``dist``."""
    p = np.asarray(dist.probs, dtype=float)
    n = np.arange(p.size, dtype=float)
    p_down = math.fsum(p * np.sin(phi * np.sqrt(n + 1.0)) ** 2)
    p_down = min(max(p_down, 0.0), 1.0)
    return p_down, 1.0 - p_down


@dataclass(frozen=True)
class SteadyStateReport:
    config: MaserConfig
    distribution: PhotonDistribution
    stats: DistributionStats
    detailed_balance_residual: float
    atom_down_probability: float
    trapped_below: Optional[int]


def steady_state_report(cfg, trap_tol=TRAP_TOL):
    dist = steady_state(cfg, trap_tol)
    residual = detailed_balance_residual(dist, cfg)
    if residual >= RESIDUAL_TOL:
        raise MaserError(f"detailed-balance residual {residual:.3e} exceeds {RESIDUAL_TOL:g}")
    nz = np.flatnonzero(dist.probs)
    top = int(nz[-1])
    trapped = None
    if cfg.pump_rate_r > 0 and top < dist.n_max and pump_factors(cfg, top + 1, trap_tol)[top] == 0.0:
        trapped = top
    return SteadyStateReport(
        config=cfg,
        distribution=dist,
        stats=statistics(dist),
        detailed_balance_residual=residual,
        atom_down_probability=atom_exit_statistics(dist, cfg.phi)[0],
        trapped_below=trapped,
    )


@dataclass(frozen=True)
class ScanRow:
    value: float
    report: Optional[SteadyStateReport]
    error: Optional[str] = None


def pump_scan(cfg_base, axis, values, trap_tol=TRAP_TOL):
    """Steady-state reports along ``phi`` or ``pump_ratio`` (r/A at fixed A).

    Failures are captured per row instead of aborting the scan.
    """
    if axis not in ("phi", "pump_ratio"):
        raise DomainError("axis must be 'phi' or 'pump_ratio'")
    values = [float(v) for v in values]
    if not values:
        raise DomainError("scan needs at least one value")
    if not all(math.isfinite(v) for v in values):
        raise DomainError("scan values must be finite")
    rows = []
    for v in values:
        try:
            if axis == "phi":
                cfg = MaserConfig(cfg_base.omega, cfg_base.pump_rate_r, cfg_base.decay_A,
                                  cfg_base.nu, v, cfg_base.n_max)
            else:
                cfg = MaserConfig(cfg_base.omega, v * cfg_base.decay_A, cfg_base.decay_A,
                                  cfg_base.nu, cfg_base.phi, cfg_base.n_max)
            rows.append(ScanRow(v, steady_state_report(cfg, trap_tol)))
        except MaserError as exc:
            rows.append(ScanRow(v, None, f"{type(exc).__name__}: {exc}"))
    return rows
