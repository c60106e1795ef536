"""Accelerated randomized dual coordinate ascent with primal averaging."""

from .core import RngStream, ThetaSchedule, theta_next, weighted_dual_norm, weighted_norm
from .dual import DualModel, ProblemSpec, build_dual, dual_value, primal_from_dual
from .engine import SolveReport, init, run, solve, step
from .prox import Loss, Regularizer, SeparableTerm

__version__ = "0.1.0"

__all__ = [
    "RngStream", "ThetaSchedule", "theta_next", "weighted_dual_norm", "weighted_norm",
    "DualModel", "ProblemSpec", "build_dual", "dual_value", "primal_from_dual",
    "SolveReport", "init", "run", "solve", "step",
    "Loss", "Regularizer", "SeparableTerm",
]
