"""Solver and estimate diagnostics for a degenerate pseudoparabolic
saturation equation with dynamic capillary pressure."""

from .coefficients import ModelParams, coefficient_sup_norms
from .diagnostics import DiagnosticsReport, epsilon_scaling_study, mixed_norm
from .entropy import EntropyEvaluator
from .fem import Mesh1D, ProblemData
from .hypotheses import HypothesisReport, check_hypotheses
from .regularization import RegularizedModel, cut_z
from .stepping import GalerkinSolver, StepperOptions

__version__ = "0.1.0"

__all__ = [
    "ModelParams",
    "RegularizedModel",
    "HypothesisReport",
    "check_hypotheses",
    "coefficient_sup_norms",
    "cut_z",
    "EntropyEvaluator",
    "Mesh1D",
    "ProblemData",
    "GalerkinSolver",
    "StepperOptions",
    "DiagnosticsReport",
    "epsilon_scaling_study",
    "mixed_norm",
    "__version__",
]
