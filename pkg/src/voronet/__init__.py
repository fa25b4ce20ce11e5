"""Coverage, buffer-equilibrium and spatial simulation for downlink
Poisson-Voronoi cellular networks with per-user retransmission buffers."""

__version__ = "1.0.0"

from .model import (
    NetworkParams,
    ParameterError,
    TrafficParams,
    attenuation_normalized,
    avg_received_power,
    c_constant,
    k_delta,
    k_delta_fast,
    unit_ball_volume,
)
from .coverage import (
    CoverageEvaluator,
    QuadratureError,
    closed_coverage,
    conditional_success_given_points,
    coverage_closed,
    coverage_sigma,
)
from .equilibrium import (
    ConvergenceError,
    DimensioningResult,
    EquilibriumSolution,
    EvolutionTrace,
    InfeasibleResult,
    critical_p,
    delay_formula,
    dimension_buffer,
    evolve,
    k1_closed,
    kinf_closed,
    kpis,
    limiting_pi,
    map_F,
    pure_loss_rate,
    slot_stationary,
    solve_busy,
    solve_busy_infinite,
    t_max,
    transition_matrix,
)
from .geomsim import (
    KpiEstimate,
    SamplingError,
    Scenario,
    SimStats,
    adaptive_q_sequence,
    estimate_kpis,
    merge_histograms,
    run,
    sample_scenario,
    torus_distance,
)

__all__ = [
    "__version__",
    "NetworkParams", "ParameterError", "TrafficParams",
    "attenuation_normalized", "avg_received_power", "c_constant",
    "k_delta", "k_delta_fast", "unit_ball_volume",
    "CoverageEvaluator", "QuadratureError", "closed_coverage",
    "conditional_success_given_points", "coverage_closed", "coverage_sigma",
    "ConvergenceError", "DimensioningResult", "EquilibriumSolution",
    "EvolutionTrace", "InfeasibleResult", "critical_p", "delay_formula",
    "dimension_buffer", "evolve", "k1_closed", "kinf_closed", "kpis",
    "limiting_pi", "map_F", "pure_loss_rate", "slot_stationary",
    "solve_busy", "solve_busy_infinite", "t_max", "transition_matrix",
    "KpiEstimate", "SamplingError", "Scenario", "SimStats",
    "adaptive_q_sequence", "estimate_kpis", "merge_histograms", "run",
    "sample_scenario", "torus_distance",
]
