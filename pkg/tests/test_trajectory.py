import math

import numpy as np
import pytest
from scipy import stats as sps

from micromaser import (
    DomainError,
    EventKind,
    TrajectoryRecord,
    TruncationError,
    atom_exit_statistics,
    atom_outcome_fraction,
    concatenate_records,
    empirical_distribution,
    one_atom_event_probability,
    sample_interarrival,
    simulate,
    steady_state,
    total_variation,
)

from conftest import make_cfg


def manual_record(times, kinds, n_after, t_end, initial_n=0):
    return TrajectoryRecord(
        times=np.asarray(times, dtype=float), kinds=np.asarray(kinds, dtype=np.int8),
        n_after=np.asarray(n_after, dtype=np.int32), seed=0, collective_event_count=0,
        atoms_simulated=int(np.count_nonzero(np.asarray(kinds) == 0)), initial_n=initial_n, t_end=t_end,
    )


def test_interarrival_moments():
    x = sample_interarrival(np.random.default_rng(1), 100.0, 10**6)
    assert x.mean() == pytest.approx(0.01, rel=0.005)
    assert np.mean(x > 0.01) == pytest.approx(math.exp(-1), rel=0.005)


def test_interarrival_deterministic_and_domain():
    a = sample_interarrival(np.random.default_rng(7), 3.0, 100)
    b = sample_interarrival(np.random.default_rng(7), 3.0, 100)
    assert a.tobytes() == b.tobytes()
    for bad in (0.0, -1.0):
        with pytest.raises(DomainError):
            sample_interarrival(np.random.default_rng(0), bad)


def test_interarrival_ks():
    x = sample_interarrival(np.random.default_rng(2), 50.0, 10**5)
    assert sps.kstest(x, "expon", args=(0, 1 / 50.0)).pvalue > 0.01


def test_simulated_gaps_ks():
    rec = simulate(make_cfg(2.0, 0.1, 1.0, n_max=64), 0.0, 10**5, seed=3)
    arrivals = rec.times[rec.kinds == EventKind.atom_arrival]
    gaps = np.diff(np.concatenate([[0.0], arrivals]))
    assert sps.kstest(gaps, "expon", args=(0, 1 / 2.0)).pvalue > 0.01


def test_one_atom_event_probability():
    assert one_atom_event_probability(1000.0, 50e-6) == pytest.approx(math.exp(-0.1), abs=1e-12)
    assert one_atom_event_probability(10.0, 50e-6) == pytest.approx(math.exp(-0.001), abs=1e-12)
    assert one_atom_event_probability(0.0, 50e-6) == 1.0
    with pytest.raises(DomainError):
        one_atom_event_probability(-1.0, 1.0)
    with pytest.raises(DomainError):
        one_atom_event_probability(1.0, -1.0)


def test_record_structure():
    rec = simulate(make_cfg(5.0, 0.3, 1.2, n_max=64), 0.01, 2000, seed=11)
    assert np.all(np.diff(rec.times) >= 0)
    assert np.all(rec.n_after >= 0)
    assert rec.atoms_simulated == 2000 == rec.count(EventKind.atom_arrival)
    idx = np.flatnonzero(rec.kinds == EventKind.atom_arrival)
    assert np.all(np.isin(rec.kinds[idx + 1], [EventKind.atom_exit_up, EventKind.atom_exit_down]))
    assert np.all(rec.times[idx + 1] == rec.times[idx])
    # each event changes n by the amount its kind implies
    n = np.concatenate([[rec.initial_n], rec.n_after]).astype(int)
    delta = np.diff(n)
    expected = np.select(
        [rec.kinds == EventKind.atom_exit_down, rec.kinds == EventKind.thermal_jump_up,
         rec.kinds == EventKind.thermal_jump_down], [1, 1, -1], 0)
    assert np.array_equal(delta, expected)
    assert rec.generator == "PCG64" and rec.seed == 11
    assert rec.t_end >= rec.times[-1]
    t, k, m = rec.events[0]
    assert isinstance(k, EventKind) and isinstance(m, int)


def test_determinism():
    cfg = make_cfg(20.0, 0.15, 1.0, n_max=128)
    a = simulate(cfg, 1e-3, 5000, seed=42)
    b = simulate(cfg, 1e-3, 5000, seed=42)
    c = simulate(cfg, 1e-3, 5000, seed=43)
    for f in ("times", "kinds", "n_after"):
        assert getattr(a, f).tobytes() == getattr(b, f).tobytes()
    assert (a.collective_event_count, a.t_end) == (b.collective_event_count, b.t_end)
    assert a.times.tobytes() != c.times.tobytes()


def test_trapped_vacuum_never_emits():
    rec = simulate(make_cfg(50.0, 0.0, math.pi, n_max=8), 0.0, 10**4, seed=5)
    assert rec.count(EventKind.atom_exit_down) == 0
    assert np.all(rec.n_after == 0)
    assert atom_outcome_fraction(rec) == 0.0


def test_pure_decay_time_constant():
    cfg = make_cfg(0.0, 0.0, 1.0, decay_A=2.0, n_max=16)
    area = 0.0
    runs = 10**4
    for seed in range(runs):
        rec = simulate(cfg, 0.0, 1, seed=seed, initial_n=10, duration=40.0)
        starts, ends, n = rec.segments()
        area += float(np.sum((ends - starts) * n))
    tau = area / (runs * 10)
    assert tau == pytest.approx(1 / cfg.decay_A, rel=0.02)


def test_unpumped_needs_duration():
    cfg = make_cfg(0.0, 0.5, 1.0, n_max=16)
    with pytest.raises(DomainError):
        simulate(cfg, 0.0, 10, seed=0)


@pytest.mark.parametrize("kwargs", [dict(n_atoms=0), dict(n_atoms=2.5), dict(transit_time=-1.0),
                                    dict(initial_n=99), dict(duration=-1.0)])
def test_simulate_domain(kwargs):
    args = dict(transit_time=0.0, n_atoms=10, seed=0)
    args.update(kwargs)
    with pytest.raises(DomainError):
        simulate(make_cfg(1.0, 0.1, 1.0, n_max=16), **args)


def test_simulate_truncation():
    with pytest.raises(TruncationError):
        simulate(make_cfg(50.0, 0.15, 1.0, n_max=8), 0.0, 1000, seed=0)


def test_duration_cuts_run():
    rec = simulate(make_cfg(10.0, 0.1, 1.0, n_max=64), 0.0, 10**6, seed=1, duration=3.0)
    assert rec.t_end == 3.0
    assert rec.atoms_simulated < 100
    assert np.all(rec.times < 3.0)


def test_empirical_distribution_examples():
    rec = manual_record([1.0], [EventKind.thermal_jump_up], [3], 1e6, initial_n=2)
    d = empirical_distribution(rec, 5, burn_in=1.0)
    assert d.probs[3] == 1.0
    with pytest.raises(DomainError):
        empirical_distribution(rec, 5, burn_in=1e6)
    with pytest.raises(DomainError):
        empirical_distribution(rec, 2)


def test_unpumped_thermal_chi_square():
    nu, A = 1.0, 1.0
    cfg = make_cfg(0.0, nu, 1.0, decay_A=A, n_max=200)
    rec = simulate(cfg, 0.0, 1, seed=9, duration=5.0 * 4001)
    samples = rec.state_at(5.0 * np.arange(1, 4001))
    observed = np.bincount(np.minimum(samples, 6), minlength=7)
    p = [(1 / (1 + nu)) * (nu / (1 + nu)) ** k for k in range(6)]
    p.append(1 - sum(p))
    assert sps.chisquare(observed, np.array(p) * samples.size).pvalue > 0.01


def test_concatenation_additivity():
    cfg = make_cfg(20.0, 0.15, 1.0, n_max=128)
    a = simulate(cfg, 0.0, 3000, seed=1)
    b = simulate(cfg, 0.0, 5000, seed=2, initial_n=4)
    joined = concatenate_records([a, b])
    w = np.array([a.t_end, b.t_end])
    expected = (w[0] * empirical_distribution(a, 128).probs
                + w[1] * empirical_distribution(b, 128).probs) / w.sum()
    np.testing.assert_allclose(empirical_distribution(joined, 128).probs, expected, atol=1e-12)
    assert joined.atoms_simulated == 8000
    assert joined.t_end == pytest.approx(a.t_end + b.t_end)
    with pytest.raises(DomainError):
        concatenate_records([])


def test_atom_outcome_fraction_examples():
    rec = manual_record([1.0, 1.0, 2.0, 2.0], [0, 1, 0, 1], [0, 0, 0, 0], 3.0)
    assert atom_outcome_fraction(rec) == 0.0
    with pytest.raises(DomainError):
        atom_outcome_fraction(rec, burn_in=2.5)


def test_collective_fraction():
    r, tau = 1000.0, 50e-6
    cfg = make_cfg(r / 21.5, 0.0, math.pi, decay_A=21.5, n_max=4)
    rec = simulate(cfg, tau, 10**5, seed=8)
    p = 1 - one_atom_event_probability(r, tau)
    sigma = math.sqrt(p * (1 - p) / rec.atoms_simulated)
    assert abs(rec.collective_event_count / rec.atoms_simulated - p) < 3 * sigma


def test_collective_neighbour_convention():
    # gaps smaller than tau flag both atoms adjacent to the gap
    cfg = make_cfg(1.0, 0.0, math.pi, n_max=4)
    rec = simulate(cfg, 1e9, 5, seed=0)
    assert rec.collective_event_count == 5
    assert simulate(cfg, 0.0, 5, seed=0).collective_event_count == 0


def test_convergence_with_atom_count():
    cfg = make_cfg(20.0, 0.15, 1.0, n_max=128)
    ss = steady_state(cfg)
    medians = []
    for atoms in (10**4, 10**5, 10**6):
        tvs = []
        for seed in range(10):
            rec = simulate(cfg, 0.0, atoms, seed=seed)
            tvs.append(total_variation(empirical_distribution(rec, 128, burn_in=20.0), ss))
        medians.append(np.median(tvs))
    assert medians[0] > medians[1] > medians[2]
    assert medians[2] < 0.02


def test_monte_carlo_vs_steady_state():
    cfg = make_cfg(20.0, 0.15, 1.0, n_max=128)
    rec = simulate(cfg, 0.0, 10**6, seed=2024)
    ss = steady_state(cfg)
    assert total_variation(empirical_distribution(rec, 128, burn_in=20.0), ss) < 0.02
    p_down = atom_exit_statistics(ss, cfg.phi)[0]
    late = np.count_nonzero((rec.kinds == EventKind.atom_arrival) & (rec.times >= 20.0))
    sigma = math.sqrt(p_down * (1 - p_down) / late)
    assert abs(atom_outcome_fraction(rec, burn_in=20.0) - p_down) < 3 * sigma
