"""Estimate a stationary linear flow from steered glider observations.

The package couples a Kalman filter over the six flow parameters with a
relaxation-method boundary value solver that plans locally optimal
glider headings between observations, plus a closed-loop experiment
harness and CLI reproducing the four hyperbolic fixed-point benchmarks.
"""

from .assimilation import (
    FilterState,
    ObjectiveEvaluation,
    batch_posterior,
    evaluate_sampling_objective,
    initial_state,
    kalman_update,
    posterior_trace,
    posterior_trace_gradient,
    posterior_trace_hessian_norm,
)
from .config import ExperimentConfig
from .control import (
    CohortPlan,
    HeadingPath,
    PathGrid,
    SolverSettings,
    extract_headings,
    relaxation_step,
    solve_cohort,
    solve_glider_path,
    steering_velocity,
    terminal_boundary_velocity,
)
from .flow import FLOW_CASE_TAGS, LinearFlowField, flow_case
from .observation import observation_matrix, observe, pack_parameters, unpack_parameters
from .seeding import stream_rng
from .simulate import RunRecord, plan_controls, run_experiment, simulate_segment

__version__ = "0.1.0"

__all__ = [
    "FLOW_CASE_TAGS",
    "CohortPlan",
    "ExperimentConfig",
    "FilterState",
    "HeadingPath",
    "LinearFlowField",
    "ObjectiveEvaluation",
    "PathGrid",
    "RunRecord",
    "SolverSettings",
    "batch_posterior",
    "evaluate_sampling_objective",
    "extract_headings",
    "flow_case",
    "initial_state",
    "kalman_update",
    "observation_matrix",
    "observe",
    "pack_parameters",
    "plan_controls",
    "posterior_trace",
    "posterior_trace_gradient",
    "posterior_trace_hessian_norm",
    "relaxation_step",
    "run_experiment",
    "simulate_segment",
    "solve_cohort",
    "solve_glider_path",
    "steering_velocity",
    "stream_rng",
    "terminal_boundary_velocity",
    "unpack_parameters",
]
