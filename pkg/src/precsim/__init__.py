"""Household precarity simulation: sequence index, agent models, engine, CLI."""

from .engine import (
    ATTRIBUTES,
    STRATA,
    EngineError,
    RoundSummary,
    SimulationConfig,
    SimulationResult,
    TrajectoryRecord,
    run_simulation,
)
from .ifp import (
    ConsumptionPolicy,
    ConvergenceError,
    IFPModel,
    IFPSettings,
    egm_step,
    simulate_path,
    solve_policy,
)
from .mdp import MdpAction, TransitionTable, apply_action, default_transition_table
from .metrics import (
    PrecarityParams,
    SequenceStats,
    StateSequence,
    precarity_index,
    precarity_index_batch,
    sequence_stats,
)
from .policy import (
    ClassifierPolicy,
    InterventionConfig,
    apply_resistance,
    apply_stimulus,
    calibrate_threshold,
    classify,
)
from .population import (
    DecileState,
    HealthModel,
    Household,
    IngestionError,
    PopulationSpec,
    SyntheticIncome,
    assign_deciles,
    build_population,
    update_health,
)

__version__ = "0.1.0"

__all__ = [
    "ATTRIBUTES",
    "STRATA",
    "ClassifierPolicy",
    "ConsumptionPolicy",
    "ConvergenceError",
    "DecileState",
    "EngineError",
    "HealthModel",
    "Household",
    "IFPModel",
    "IFPSettings",
    "IngestionError",
    "InterventionConfig",
    "MdpAction",
    "PopulationSpec",
    "PrecarityParams",
    "RoundSummary",
    "SequenceStats",
    "SimulationConfig",
    "SimulationResult",
    "StateSequence",
    "SyntheticIncome",
    "TrajectoryRecord",
    "TransitionTable",
    "apply_action",
    "apply_resistance",
    "apply_stimulus",
    "assign_deciles",
    "build_population",
    "calibrate_threshold",
    "classify",
    "default_transition_table",
    "egm_step",
    "precarity_index",
    "precarity_index_batch",
    "run_simulation",
    "sequence_stats",
    "simulate_path",
    "solve_policy",
    "update_health",
]
