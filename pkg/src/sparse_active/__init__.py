"""Attribute-efficient active learning of sparse halfspaces."""

from .errors import (
    DegenerateInputError,
    ParameterError,
    ProjectionConvergenceWarning,
    SamplingStarvationError,
)
from .learner import AlgorithmConstants, build_schedule, check_invariant_u_in_W, run
from .solver import ConstraintSet, SolverOptions, minimize_hinge
from .world import NoiseModel, RngState, World, gaussian, sample_target, uniform_ball

__all__ = [
    "AlgorithmConstants",
    "ConstraintSet",
    "DegenerateInputError",
    "NoiseModel",
    "ParameterError",
    "ProjectionConvergenceWarning",
    "RngState",
    "SamplingStarvationError",
    "SolverOptions",
    "World",
    "build_schedule",
    "check_invariant_u_in_W",
    "gaussian",
    "minimize_hinge",
    "run",
    "sample_target",
    "uniform_ball",
]
