"""Simulation of the one-atom maser (micromaser)."""
from .core import (
    DEFAULT_N_MAX,
    ConvergenceError,
    DistributionStats,
    DomainError,
    MaserConfig,
    MaserError,
    NumberStateMatrix,
    PhotonDistribution,
    TruncationError,
    decay_rate_from_q,
    statistics,
    thermal_distribution,
    thermal_photon_number,
    total_variation,
)
from .jcm import (
    PassageAmplitudes,
    RabiProfile,
    dressed_phase,
    effective_rabi_angle,
    emission_probability,
    gain_superoperator_full,
    passage_amplitudes,
    pump_kick_down,
    pump_kick_up,
)
from .master import (
    EvolutionResult,
    diagonal_rhs,
    full_rhs,
    integrate,
    mean_field,
    unpumped_mean_field,
    unpumped_mean_number,
)
from .steady import (
    ScanRow,
    SteadyStateReport,
    atom_exit_statistics,
    detailed_balance_residual,
    pump_scan,
    recurrence_steady_state,
    steady_state,
    steady_state_report,
    trapped_state_numbers,
)
from .trajectory import (
    EventKind,
    TrajectoryRecord,
    atom_outcome_fraction,
    concatenate_records,
    empirical_distribution,
    one_atom_event_probability,
    sample_interarrival,
    simulate,
)

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_N_MAX",
    "ConvergenceError",
    "DistributionStats",
    "DomainError",
    "MaserConfig",
    "MaserError",
    "NumberStateMatrix",
    "PhotonDistribution",
    "TruncationError",
    "decay_rate_from_q",
    "statistics",
    "thermal_distribution",
    "thermal_photon_number",
    "total_variation",
    "PassageAmplitudes",
    "RabiProfile",
    "dressed_phase",
    "effective_rabi_angle",
    "emission_probability",
    "gain_superoperator_full",
    "passage_amplitudes",
    "pump_kick_down",
    "pump_kick_up",
    "EvolutionResult",
    "diagonal_rhs",
    "full_rhs",
    "integrate",
    "mean_field",
    "unpumped_mean_field",
    "unpumped_mean_number",
    "ScanRow",
    "SteadyStateReport",
    "atom_exit_statistics",
    "detailed_balance_residual",
    "pump_scan",
    "recurrence_steady_state",
    "steady_state",
    "steady_state_report",
    "trapped_state_numbers",
    "EventKind",
    "TrajectoryRecord",
    "atom_outcome_fraction",
    "concatenate_records",
    "empirical_distribution",
    "one_atom_event_probability",
    "sample_interarrival",
    "simulate",
]
