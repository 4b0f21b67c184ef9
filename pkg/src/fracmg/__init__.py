"""Finite-volume solver for Darcy flow in a fractured slab with an inertial
(Forchheimer) fracture law, solved by monolithic nonlinear multigrid."""

from .fas import CycleConfig, Hierarchy, SolverReport, fas_cycle, solve, solve_linear
from .grid import Layout, StaggeredGrid, build_grid, coarsen
from .operator import (
    BlockOperator,
    DiscreteOperator,
    MixedDimVector,
    apply,
    assemble_rhs,
    jacobian,
)
from .oracle import ComparisonReport, NewtonConfig, compare, newton_solve
from .problem import HorizontalBoundary, ProblemSpec, alpha_gamma, paper_test_problem
from .transfer import TransferConfig, TransferPair
from .vanka import SmootherConfig, smooth_fracture_cell, smooth_matrix_cell, smoothing_step

__all__ = [
    "BlockOperator",
    "ComparisonReport",
    "CycleConfig",
    "DiscreteOperator",
    "Hierarchy",
    "HorizontalBoundary",
    "Layout",
    "MixedDimVector",
    "NewtonConfig",
    "ProblemSpec",
    "SmootherConfig",
    "SolverReport",
    "StaggeredGrid",
    "TransferConfig",
    "TransferPair",
    "alpha_gamma",
    "apply",
    "assemble_rhs",
    "build_grid",
    "coarsen",
    "compare",
    "fas_cycle",
    "jacobian",
    "newton_solve",
    "paper_test_problem",
    "smooth_fracture_cell",
    "smooth_matrix_cell",
    "smoothing_step",
    "solve",
    "solve_linear",
]

__version__ = "0.1.0"
