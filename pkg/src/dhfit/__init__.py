"""Hydraulic simulation and resistance estimation for district heating trees.

The package models a dual supply/return tree network with one valve per
consumer, simulates feasible steady states, and estimates every pipe and
valve resistance from measurements taken at just two reference nodes.
"""

from .estimation import (
    EstimationResult,
    IdentifiabilityReport,
    RegressionSystem,
    build_system,
    column_labels,
    estimate,
    identifiability,
    regressor_row,
)
from .experiments import (
    ExperimentConfig,
    ExperimentSummary,
    ReferenceScenario,
    monte_carlo,
    reference_scenario,
    run_trial,
)
from .hydraulics import (
    ControlVector,
    FlowVector,
    InconsistentStateError,
    InfeasiblePressureError,
    LoadCondition,
    PressureState,
    ResistanceVector,
    f_eval,
    min_required_dp,
    nodal_pressures,
    pipe_resistance_from_physical,
    required_valve_positions,
    simulate,
    solve_supply_flows,
    valve_resistance_from_k,
)
from .scenario import (
    DEFAULT_SUPPLY_PRESSURE,
    NoiseModel,
    ScenarioConfig,
    apply_noise,
    apply_noise_sequence,
    generate_load_conditions,
)
from .topology import (
    ALPHA,
    BoundaryPath,
    NetworkTopology,
    TopologyError,
    ValidationReport,
    boundary_path,
    incidence_matrix,
    mirror_return,
    validate_topology,
)

__version__ = "0.1.0"

__all__ = [
    "ALPHA",
    "BoundaryPath",
    "ControlVector",
    "DEFAULT_SUPPLY_PRESSURE",
    "EstimationResult",
    "ExperimentConfig",
    "ExperimentSummary",
    "FlowVector",
    "IdentifiabilityReport",
    "InconsistentStateError",
    "InfeasiblePressureError",
    "LoadCondition",
    "NetworkTopology",
    "NoiseModel",
    "PressureState",
    "ReferenceScenario",
    "RegressionSystem",
    "ResistanceVector",
    "ScenarioConfig",
    "TopologyError",
    "ValidationReport",
    "apply_noise",
    "apply_noise_sequence",
    "boundary_path",
    "build_system",
    "column_labels",
    "estimate",
    "f_eval",
    "generate_load_conditions",
    "identifiability",
    "incidence_matrix",
    "min_required_dp",
    "mirror_return",
    "monte_carlo",
    "nodal_pressures",
    "pipe_resistance_from_physical",
    "reference_scenario",
    "regressor_row",
    "required_valve_positions",
    "run_trial",
    "simulate",
    "solve_supply_flows",
    "valve_resistance_from_k",
    "validate_topology",
]
