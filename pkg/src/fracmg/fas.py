"""Monolithic nonlinear multigrid driver (full approximation scheme).

A two-level step: pre-smooth; restrict both the residual and the current
approximation; solve the coarse problem ``A_H(v) = A_H(u_H) + r_H`` with the
rediscretized coarse operator; correct with the prolonged difference
``v - u_H``; post-smooth.  W-cycles recurse twice per level, V-cycles once.
The coarsest level is solved by frozen-coefficient (Picard) iteration with a
sparse direct factorization.

The cycle works on the natural (unscaled) equations, matching the averaging
transfer stencils; convergence is monitored in the Euclidean norm of the
scaled residual, relative to the initial one.  For a linear problem
(``beta = 0``) the scheme reproduces the classical correction-scheme
multigrid cycle, available separately as :func:`solve_linear` for
equivalence checks.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse.linalg as spla

from .grid import GridError, StaggeredGrid, coarsen
from .operator import DiscreteOperator, MixedDimVector
from .problem import ProblemSpec
from .transfer import TransferConfig, TransferPair
from .vanka import SmootherConfig, smoothing_step


class CoarseSolverError(RuntimeError):
    """The coarsest-level iteration failed to reach its tolerance."""


@dataclass(frozen=True)
class CycleConfig:
    cycle: str = "W"
    nu1: int = 2
    nu2: int = 2
    tol_factor: float = 1e-10
    max_cycles: int = 40
    coarsest_cells: int = 4
    coarse_tol: float = 1e-12
    coarse_max_iters: int = 50
    smoother: SmootherConfig = field(default_factory=SmootherConfig)
    transfer: TransferConfig = field(default_factory=TransferConfig)

    def __post_init__(self):
        if self.cycle not in ("V", "W"):
            raise ValueError("cycle must be 'V' or 'W'")

    @property
    def gamma(self) -> int:
        return 2 if self.cycle == "W" else 1


@dataclass
class Level:
    grid: StaggeredGrid
    op: DiscreteOperator
    to_coarse: TransferPair | None = None


class Hierarchy:
    """Grids, rediscretized operators and transfers from finest to coarsest."""

    def __init__(self, spec: ProblemSpec, grid: StaggeredGrid, cfg: CycleConfig):
        if grid.n < cfg.coarsest_cells:
            raise GridError(
                f"grid has {grid.n} cells per subdomain, below the coarsest level size "
                f"{cfg.coarsest_cells}"
            )
        grids = [grid]
        while grids[-1].n > cfg.coarsest_cells:
            grids.append(coarsen(grids[-1]))
        self.levels = [Level(g, DiscreteOperator(spec, g)) for g in grids]
        for lvl, nxt in zip(self.levels[:-1], self.levels[1:]):
            lvl.to_coarse = TransferPair(lvl.op.layout, cfg.transfer)
            assert lvl.to_coarse.coarse == nxt.op.layout
        self.spec = spec
        self.cfg = cfg

    @property
    def finest(self) -> Level:
        return self.levels[0]


@dataclass
class SolverReport:
    """Residual history (scaled norm, starting with the initial residual),
    iteration count, convergence flag, wall time and the final state."""

    history: list[float]
    iterations: int
    converged: bool
    wall_time: float
    state: MixedDimVector
    non_monotone_cycles: list[int] = field(default_factory=list)

    @property
    def reduction_factors(self) -> list[float]:
        return [
            b / a if a > 0 else float("nan")
            for a, b in zip(self.history[:-1], self.history[1:])
        ]


def coarse_solve(
    op: DiscreteOperator,
    rhs: np.ndarray,
    x0: np.ndarray | None = None,
    tol: float = 1e-12,
    max_iters: int = 50,
) -> np.ndarray:
    """Frozen-coefficient iteration with a sparse direct solve per step.

    The fracture momentum diagonal is frozen at ``1 + (beta/d)|u_g|`` of the
    current iterate; everything else is linear, so each step is one
    factorization of the (row-scaled) system.  Converges in a single step for
    ``beta = 0``.  Tolerance is relative, in the scaled residual norm.
    """
    x = np.zeros(op.layout.total) if x0 is None else x0.copy()
    scale = max(float(np.linalg.norm(op.row_scale * rhs)), 1e-300)
    for _ in range(max_iters):
        r = op.residual_natural(x, rhs)
        if np.linalg.norm(op.row_scale * r) <= tol * scale:
            return x
        mat = op.matrix(x, mode="picard", scaled=True).tocsc()
        x = x + spla.splu(mat).solve(op.row_scale * r)
    r = op.residual_natural(x, rhs)
    res = np.linalg.norm(op.row_scale * r)
    if res <= tol * scale:
        return x
    raise CoarseSolverError(
        f"coarsest-level solve stalled at relative residual {res / scale:.3e} "
        f"after {max_iters} iterations"
    )


def _fas_cycle(h: Hierarchy, lvl: int, x: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    cfg = h.cfg
    level = h.levels[lvl]
    op = level.op
    if lvl == len(h.levels) - 1:
        return coarse_solve(op, rhs, x0=x, tol=cfg.coarse_tol, max_iters=cfg.coarse_max_iters)
    xv = op.vector(x)
    for _ in range(cfg.nu1):
        smoothing_step(op, xv, cfg.smoother, rhs)
    tp = level.to_coarse
    r_coarse = tp.restrict_vector(op.residual_natural(x, rhs))
    u_coarse = tp.restrict_vector(x)
    coarse_op = h.levels[lvl + 1].op
    rhs_coarse = coarse_op.operator_natural(u_coarse) + r_coarse
    v = u_coarse.copy()
    for _ in range(cfg.gamma):
        v = _fas_cycle(h, lvl + 1, v, rhs_coarse)
    x += tp.prolong_vector(v - u_coarse)
    for _ in range(cfg.nu2):
        smoothing_step(op, xv, cfg.smoother, rhs)
    return x


def fas_cycle(h: Hierarchy, level: int, x: MixedDimVector, rhs: np.ndarray) -> MixedDimVector:
    """One nonlinear cycle on ``level``; mutates and returns ``x``."""
    out = _fas_cycle(h, level, x.data, np.asarray(rhs))
    if out is not x.data:
        x.data[:] = out
    return x


def _linear_cycle(h: Hierarchy, lvl: int, x: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Classical correction-scheme cycle; valid only for a linear operator."""
    cfg = h.cfg
    level = h.levels[lvl]
    op = level.op
    if lvl == len(h.levels) - 1:
        return coarse_solve(op, rhs, x0=x, tol=cfg.coarse_tol, max_iters=cfg.coarse_max_iters)
    xv = op.vector(x)
    for _ in range(cfg.nu1):
        smoothing_step(op, xv, cfg.smoother, rhs)
    tp = level.to_coarse
    r_coarse = tp.restrict_vector(op.residual_natural(x, rhs))
    e = np.zeros(tp.coarse.total)
    for _ in range(cfg.gamma):
        e = _linear_cycle(h, lvl + 1, e, r_coarse)
    x += tp.prolong_vector(e)
    for _ in range(cfg.nu2):
        smoothing_step(op, xv, cfg.smoother, rhs)
    return x


def _iterate(h: Hierarchy, cycle_fn, initial_guess: MixedDimVector | None) -> SolverReport:
    cfg = h.cfg
    op = h.finest.op
    x = op.zero_state() if initial_guess is None else initial_guess.copy()
    rhs = op.natural_rhs
    t0 = time.perf_counter()
    r0 = op.scaled_norm(op.residual_natural(x.data, rhs))
    history = [r0]
    converged = r0 == 0.0
    iterations = 0
    while not converged and iterations < cfg.max_cycles:
        cycle_fn(h, 0, x.data, rhs)
        iterations += 1
        rn = op.scaled_norm(op.residual_natural(x.data, rhs))
        history.append(rn)
        if rn <= cfg.tol_factor * r0:
            converged = True
    non_monotone = [
        i for i in range(1, len(history) - 1) if history[i + 1] > history[i]
    ]
    return SolverReport(
        history=history,
        iterations=iterations,
        converged=converged,
        wall_time=time.perf_counter() - t0,
        state=x,
        non_monotone_cycles=non_monotone,
    )


def solve(
    spec: ProblemSpec,
    grid: StaggeredGrid,
    cfg: CycleConfig | None = None,
    initial_guess: MixedDimVector | None = None,
) -> SolverReport:
    """Run cycles from the initial guess (zero by default) until the scaled
    residual norm drops by ``tol_factor`` or ``max_cycles`` is exhausted."""
    cfg = cfg or CycleConfig()
    h = Hierarchy(spec, grid, cfg)
    return _iterate(h, _fas_cycle, initial_guess)


def solve_linear(
    spec: ProblemSpec,
    grid: StaggeredGrid,
    cfg: CycleConfig | None = None,
    initial_guess: MixedDimVector | None = None,
) -> SolverReport:
    """Correction-scheme multigrid for the ``beta = 0`` problem (equivalence twin)."""
    if spec.beta != 0.0:
        raise ValueError("the linear cycle applies only to beta = 0")
    cfg = cfg or CycleConfig()
    h = Hierarchy(spec, grid, cfg)
    return _iterate(h, _linear_cycle, initial_guess)
