"""Reference solver: exact Newton with a sparse direct factorization.

Independent of the multigrid path end to end — it consumes only the assembled
scaled residual and Jacobian — and serves to validate both the discretization
and the multigrid solver at desk scales (direct factorization, so keep the
unknown count around 1e5 or below).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse.linalg as spla

from .fas import CycleConfig, SolverReport, solve
from .grid import StaggeredGrid
from .operator import DiscreteOperator, MixedDimVector
from .problem import ProblemSpec


class NewtonError(RuntimeError):
    """Newton iteration failed to converge."""


@dataclass(frozen=True)
class NewtonConfig:
    abs_tol: float = 0.0
    rel_tol: float = 1e-13
    max_iters: int = 30
    line_search: bool = False

    def __post_init__(self):
        if self.abs_tol < 0 or self.rel_tol < 0 or (self.abs_tol == 0 and self.rel_tol == 0):
            raise ValueError("tolerances must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")


def newton_solve(
    spec: ProblemSpec, grid: StaggeredGrid, cfg: NewtonConfig | None = None
) -> SolverReport:
    """Plain Newton from the zero state on the scaled system.

    The linearization differs from the operator only in the fracture momentum
    diagonal, so each step is one sparse LU factorization.  Converges in one
    iteration for ``beta = 0``.
    """
    cfg = cfg or NewtonConfig()
    op = DiscreteOperator(spec, grid)
    x = op.zero_state()
    t0 = time.perf_counter()
    r = op.residual_scaled(x.data)
    history = [float(np.linalg.norm(r))]
    target = max(cfg.abs_tol, cfg.rel_tol * history[0])
    converged = history[0] <= target
    iterations = 0
    while not converged and iterations < cfg.max_iters:
        jac = op.matrix(x.data, mode="newton", scaled=True).tocsc()
        dx = spla.splu(jac).solve(r)
        step = 1.0
        x_new = x.data + dx
        r_new = op.residual_scaled(x_new)
        if cfg.line_search:
            for _ in range(8):
                if np.linalg.norm(r_new) < np.linalg.norm(r) or step < 1e-2:
                    break
                step *= 0.5
                x_new = x.data + step * dx
                r_new = op.residual_scaled(x_new)
        x.data[:] = x_new
        r = r_new
        iterations += 1
        history.append(float(np.linalg.norm(r)))
        converged = history[-1] <= target
    return SolverReport(
        history=history,
        iterations=iterations,
        converged=converged,
        wall_time=time.perf_counter() - t0,
        state=x,
    )


@dataclass
class ComparisonReport:
    """Sup-norm relative discrepancies between the multigrid and Newton states."""

    global_rel: float
    blockwise: dict[str, float] = field(default_factory=dict)
    fas: SolverReport | None = None
    newton: SolverReport | None = None


def compare(
    spec: ProblemSpec,
    grid: StaggeredGrid,
    cycle_cfg: CycleConfig | None = None,
    newton_cfg: NewtonConfig | None = None,
) -> ComparisonReport:
    """Solve with both paths to tight tolerances and measure their disagreement."""
    cycle_cfg = cycle_cfg or CycleConfig(tol_factor=1e-12, max_cycles=40)
    newton_cfg = newton_cfg or NewtonConfig()
    fas_rep = solve(spec, grid, cycle_cfg)
    newt_rep = newton_solve(spec, grid, newton_cfg)
    if not fas_rep.converged:
        raise NewtonError("multigrid solve did not converge; comparison is meaningless")
    if not newt_rep.converged:
        raise NewtonError("Newton solve did not converge; comparison is meaningless")
    ref = newt_rep.state
    cur = fas_rep.state
    blockwise = {}
    for name in ("U1", "U2", "Ug", "P1", "P2", "Pg"):
        a = cur.block(name)
        b = ref.block(name)
        scale = max(float(np.max(np.abs(b))), 1e-300)
        blockwise[name] = float(np.max(np.abs(a - b))) / scale
    global_scale = max(float(np.max(np.abs(ref.data))), 1e-300)
    global_rel = float(np.max(np.abs(cur.data - ref.data))) / global_scale
    return ComparisonReport(
        global_rel=global_rel, blockwise=blockwise, fas=fas_rep, newton=newt_rep
    )
