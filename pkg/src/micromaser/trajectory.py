"""Event-driven Monte Carlo simulation of the one-atom maser.

Atoms arrive as a Poisson stream at rate ``r``.  Each arrival is an
instantaneous Jaynes-Cummings kick: with probability ``sin²(phi sqrt(n+1))``
the atom leaves in the lower state and ``n -> n + 1``.  Between arrivals the
photon number performs the thermal birth-death process with down-rate
``A (nu+1) n`` and up-rate ``A nu (n+1)``, sampled exactly by competing
exponentials.  Recording the exit state of every atom keeps the field in a
definite photon number, so the time-averaged occupancy reproduces the
diagonal master equation.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .core import DomainError, PhotonDistribution, TruncationError

GENERATOR_NAME = "PCG64"
_BLOCK = 1 << 14


class EventKind(enum.IntEnum):
    atom_arrival = 0
    atom_exit_up = 1
    atom_exit_down = 2
    thermal_jump_up = 3
    thermal_jump_down = 4


@dataclass(frozen=True)
class TrajectoryRecord:
    """Event log of one simulated run.

    ``times``, ``kinds`` and ``n_after`` are parallel arrays; the photon number
    is ``initial_n`` on ``[0, times[0])`` and ``n_after[i]`` on
    ``[times[i], times[i+1])``, the last interval ending at ``t_end``.
    """

    times: np.ndarray
    kinds: np.ndarray
    n_after: np.ndarray
    seed: int
    collective_event_count: int
    atoms_simulated: int
    initial_n: int
    t_end: float
    generator: str = GENERATOR_NAME
    metadata: dict = field(default_factory=dict)

    @property
    def events(self):
        """The event log as ``(time, EventKind, photon_number_after)`` tuples."""
        return [(float(t), EventKind(int(k)), int(n))
                for t, k, n in zip(self.times, self.kinds, self.n_after)]

    def count(self, kind):
        return int(np.count_nonzero(self.kinds == int(kind)))

    def segments(self):
        """Piecewise-constant photon number: ``(starts, ends, n)`` arrays."""
        starts = np.concatenate([[0.0], self.times])
        ends = np.concatenate([self.times, [self.t_end]])
        n = np.concatenate([[self.initial_n], self.n_after]).astype(np.int64)
        return starts, ends, n

    def state_at(self, t):
        """Photon number at time(s) ``t`` (right-continuous)."""
        idx = np.searchsorted(self.times, np.asarray(t, dtype=float), side="right")
        n = np.concatenate([[self.initial_n], self.n_after])
        return n[idx]


def concatenate_records(records):
    """Join runs end to start, for pooled statistics only."""
    records = list(records)
    if not records:
        raise DomainError("nothing to concatenate")
    offset = 0.0
    times, kinds, n_after = [], [], []
    for i, rec in enumerate(records):
        if i:
            prev = int(records[i - 1].state_at(np.inf))
            if rec.initial_n != prev:
                # state change at the join keeps the occupancy exact
                kind = EventKind.thermal_jump_up if rec.initial_n > prev else EventKind.thermal_jump_down
                times.append(np.array([offset]))
                kinds.append(np.array([kind], dtype=np.int8))
                n_after.append(np.array([rec.initial_n], dtype=np.int32))
        times.append(rec.times + offset)
        kinds.append(rec.kinds)
        n_after.append(rec.n_after)
        offset += rec.t_end
    return TrajectoryRecord(
        times=np.concatenate(times), kinds=np.concatenate(kinds), n_after=np.concatenate(n_after),
        seed=records[0].seed,
        collective_event_count=sum(r.collective_event_count for r in records),
        atoms_simulated=sum(r.atoms_simulated for r in records),
        initial_n=records[0].initial_n, t_end=offset,
        metadata={"concatenated": len(records)},
    )


def sample_interarrival(rng, rate_r, size=None):
    """Exponential waiting time(s) with mean ``1 / rate_r``."""
    if not rate_r > 0:
        raise DomainError("rate_r must be > 0")
    return rng.exponential(1.0 / rate_r, size=size)


def one_atom_event_probability(rate_r, transit_time):
    """Probability ``exp(-2 r L/v)`` that neither neighbour overlaps an atom's transit."""
    if rate_r < 0:
        raise DomainError("rate_r must be >= 0")
    if transit_time < 0:
        raise DomainError("transit_time must be >= 0")
    return math.exp(-2.0 * rate_r * transit_time)


class _Buffered:
    def __init__(self, draw):
        self._draw = draw
        self._buf = draw(_BLOCK)
        self._i = 0

    def next(self):
        if self._i == _BLOCK:
            self._buf = self._draw(_BLOCK)
            self._i = 0
        v = self._buf[self._i]
        self._i += 1
        return v


def simulate(cfg, transit_time, n_atoms, seed, *, initial_n=0, duration=None):
    """Simulate ``n_atoms`` pump atoms (or ``duration`` seconds) from ``initial_n`` photons.

    The run ends at the would-be arrival of atom ``n_atoms + 1``, or at
    ``duration`` if that comes first.  With ``cfg.pump_rate_r == 0`` no atom
    arrives and ``duration`` is required.

    Atoms closer than ``transit_time`` to a neighbour (the stream start and
    the would-be next arrival count as neighbours) are counted in
    ``collective_event_count`` and still kicked as single atoms.
    """
    if int(n_atoms) != n_atoms or n_atoms < 1:
        raise DomainError("n_atoms must be an integer >= 1")
    if not transit_time >= 0:
        raise DomainError("transit_time must be >= 0")
    if int(initial_n) != initial_n or not 0 <= initial_n <= cfg.n_max:
        raise DomainError(f"initial_n must be an integer in 0..{cfg.n_max}")
    r = cfg.pump_rate_r
    if duration is not None and not duration > 0:
        raise DomainError("duration must be > 0")
    if r == 0 and duration is None:
        raise DomainError("duration is required when pump_rate_r = 0")
    n_atoms = int(n_atoms)

    streams = [np.random.Generator(np.random.PCG64(s))
               for s in np.random.SeedSequence(seed).spawn(3)]
    arrival_rng, kick_rng, thermal_rng = streams

    if r > 0:
        gaps = sample_interarrival(arrival_rng, r, n_atoms + 1)
        arrivals = np.cumsum(gaps)
        t_end = float(arrivals[-1])
        if duration is not None and duration < t_end:
            t_end = float(duration)
        n_in = int(np.searchsorted(arrivals[:-1], t_end, side="left"))
        arrivals = arrivals[:n_in]
        close = gaps < transit_time
        collective = int(np.count_nonzero(close[:n_in] | close[1:n_in + 1]))
        kicks = kick_rng.random(n_in)
    else:
        arrivals = np.empty(0)
        kicks = np.empty(0)
        t_end = float(duration)
        n_in = 0
        collective = 0

    n_max = cfg.n_max
    s2 = np.sin(cfg.phi * np.sqrt(np.arange(n_max + 1) + 1.0)) ** 2
    a_down = cfg.decay_A * (cfg.nu + 1.0)
    a_up = cfg.decay_A * cfg.nu
    expo = _Buffered(thermal_rng.standard_exponential)
    unif = _Buffered(thermal_rng.random)

    times, kinds, n_after = [], [], []
    t_add, k_add, n_add = times.append, kinds.append, n_after.append
    JUMP_UP, JUMP_DOWN = int(EventKind.thermal_jump_up), int(EventKind.thermal_jump_down)
    ARRIVE, EXIT_UP, EXIT_DOWN = (int(EventKind.atom_arrival), int(EventKind.atom_exit_up),
                                  int(EventKind.atom_exit_down))
    n = int(initial_n)
    t = 0.0
    for i in range(n_in + 1):
        horizon = float(arrivals[i]) if i < n_in else t_end
        # thermal jumps up to the next arrival (memoryless, so restart after)
        while True:
            down = a_down * n
            total = down + a_up * (n + 1)
            if total == 0.0:
                break
            t_next = t + expo.next() / total
            if t_next >= horizon:
                break
            t = t_next
            if unif.next() * total < down:
                n -= 1
                k_add(JUMP_DOWN)
            else:
                n += 1
                if n > n_max:
                    raise TruncationError(f"photon number exceeded n_max = {n_max} at t = {t:.6g} s")
                k_add(JUMP_UP)
            t_add(t)
            n_add(n)
        if i == n_in:
            break
        t = horizon
        t_add(t)
        k_add(ARRIVE)
        n_add(n)
        t_add(t)
        if kicks[i] < s2[n]:
            n += 1
            if n > n_max:
                raise TruncationError(f"photon number exceeded n_max = {n_max} at t = {t:.6g} s")
            k_add(EXIT_DOWN)
        else:
            k_add(EXIT_UP)
        n_add(n)

    return TrajectoryRecord(
        times=np.asarray(times, dtype=float),
        kinds=np.asarray(kinds, dtype=np.int8),
        n_after=np.asarray(n_after, dtype=np.int32),
        seed=int(seed),
        collective_event_count=collective,
        atoms_simulated=n_in,
        initial_n=int(initial_n),
        t_end=t_end,
        metadata={"transit_time": float(transit_time)},
    )


def empirical_distribution(record, n_max, burn_in=0.0):
    """Time-weighted occupancy of each photon number after ``burn_in`` seconds."""
    if not burn_in < record.t_end:
        raise DomainError("burn_in must be shorter than the record")
    starts, ends, n = record.segments()
    w = np.clip(ends, burn_in, None) - np.clip(starts, burn_in, None)
    if not w.sum() > 0:
        raise DomainError("empty window after burn_in")
    if n.max() > n_max:
        raise DomainError(f"record reaches n = {n.max()} > n_max = {n_max}")
    occ = np.bincount(n, weights=w, minlength=n_max + 1)
    return PhotonDistribution(occ / occ.sum())


def atom_outcome_fraction(record, burn_in=0.0):
    """Fraction of atoms arriving after ``burn_in`` that left in the lower state."""
    exits = (record.kinds == EventKind.atom_exit_up) | (record.kinds == EventKind.atom_exit_down)
    late = exits & (record.times >= burn_in)
    total = int(np.count_nonzero(late))
    if total == 0:
        raise DomainError("no atoms after burn_in")
    down = int(np.count_nonzero(late & (record.kinds == EventKind.atom_exit_down)))
    return down / total
