"""Curves of minimax curvature between two oriented points with a given length."""

from .certificate import Certificate, apply_optimality_filters, reconstruct_certificate, sos_threshold_b
from .geometry import ArcProgram, ArcSegment, OrientedPoint, propagate_program, sample_program
from .model import ProblemInstance, classify, feasibility_screen, reflect_program, residuals
from .optimizer import (
    InfeasibleInstanceError,
    NoSolutionError,
    Solution,
    SolveReport,
    SolverConfig,
    local_solve,
    multistart_solve,
    sweep_tf,
)
from .verify import dubins_solve, md_crosscheck, transcription_solve

__all__ = [
    "ArcProgram",
    "ArcSegment",
    "Certificate",
    "InfeasibleInstanceError",
    "NoSolutionError",
    "OrientedPoint",
    "ProblemInstance",
    "Solution",
    "SolveReport",
    "SolverConfig",
    "apply_optimality_filters",
    "classify",
    "dubins_solve",
    "feasibility_screen",
    "local_solve",
    "md_crosscheck",
    "multistart_solve",
    "propagate_program",
    "reconstruct_certificate",
    "reflect_program",
    "residuals",
    "sample_program",
    "sos_threshold_b",
    "sweep_tf",
    "transcription_solve",
]
