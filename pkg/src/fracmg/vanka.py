"""Mixed-dimensional Vanka relaxation.

Matrix cells: for every pressure cell, the four edge velocities and the cell
pressure are updated together by solving the local increment system (the
classic five-point saddle block; four unknowns where an impermeable boundary
eliminated an edge).  The momentum rows are diagonal in the local velocities,
so the solve reduces to a scalar Schur complement in the pressure increment.
Interface velocity columns are relaxed inside their adjacent cell block with
the fracture pressure and the cross-subdomain flux frozen at current values.

Fracture cells: a 3x3 block of the two edge velocities and the cell pressure,
with the nonlinear diagonal ``1 + (beta/d)|u_g|`` frozen at the latest
velocity values and the matrix interface fluxes frozen in the mass residual;
increments are applied with damping ``omega``.

Sweeps are sequential Gauss-Seidel, lexicographic over cells, subdomain 1
first, then subdomain 2, then the fracture bottom to top (reversed order
behind the ``lexicographic`` flag).  The updates are invariant under row
scaling of the global system, so the kernels work on the natural equations.

The ``smooth_*_cell`` functions build and solve the explicit dense local
system and exist as the slow reference path; :func:`smoothing_step` runs the
compiled kernels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .operator import DiscreteOperator, MixedDimVector


@dataclass(frozen=True)
class SmootherConfig:
    omega: float = 0.7
    fracture_sweeps_per_step: int = 2
    matrix_sweeps_per_step: int = 1
    lexicographic: bool = True

    def __post_init__(self):
        if not (0.0 < self.omega <= 1.0):
            raise ValueError("omega must lie in (0, 1]")


@njit(cache=True)
def _sweep_matrix(u, v, p, pg, u_other, Tu, du_if, cross, Tv, ru, rv, rq, dx, dy,
                  jv0, v_bottom, v_top, iface_east, forward):
    n = p.shape[0]
    start, stop, step = (0, n, 1) if forward else (n - 1, -1, -1)
    for i in range(start, stop, step):
        for j in range(start, stop, step):
            # west edge
            TW = Tu[i, j]
            if i == 0:
                if iface_east:
                    exprW = u[0, j] + TW * p[0, j]
                    dW = 1.0
                else:
                    dW = du_if[j]
                    exprW = dW * u[0, j] + TW * (p[0, j] - pg[j]) + cross[j] * u_other[j]
            else:
                exprW = u[i, j] + TW * (p[i, j] - p[i - 1, j])
                dW = 1.0
            rW = ru[i, j] - exprW

            # east edge
            TE = Tu[i + 1, j]
            if i == n - 1:
                if iface_east:
                    dE = du_if[j]
                    exprE = dE * u[n, j] + TE * (pg[j] - p[n - 1, j]) + cross[j] * u_other[j]
                else:
                    exprE = u[n, j] - TE * p[n - 1, j]
                    dE = 1.0
            else:
                exprE = u[i + 1, j] + TE * (p[i + 1, j] - p[i, j])
                dE = 1.0
            rE = ru[i + 1, j] - exprE

            act_s = j > 0 or v_bottom
            act_n = j + 1 < n or v_top
            rS = 0.0
            rN = 0.0
            TS = 0.0
            TN = 0.0
            col_s = j - jv0
            col_n = j + 1 - jv0
            vS = 0.0
            vN = 0.0
            if act_s:
                TS = Tv[i, j]
                vS = v[i, col_s]
                if j == 0:
                    exprS = vS + TS * p[i, 0]
                else:
                    exprS = vS + TS * (p[i, j] - p[i, j - 1])
                rS = rv[i, col_s] - exprS
            if act_n:
                TN = Tv[i, j + 1]
                vN = v[i, col_n]
                if j == n - 1:
                    exprN = vN - TN * p[i, n - 1]
                else:
                    exprN = vN + TN * (p[i, j + 1] - p[i, j])
                rN = rv[i, col_n] - exprN

            div = (u[i + 1, j] - u[i, j]) / dx[i] + (vN - vS) / dy[j]
            rP = rq[i, j] - div

            S = (TE / dE + TW / dW) / dx[i]
            acc = rP - (rE / dE - rW / dW) / dx[i]
            if act_s:
                S += TS / dy[j]
                acc += rS / dy[j]
            if act_n:
                S += TN / dy[j]
                acc -= rN / dy[j]
            dp = acc / S

            u[i, j] += (rW - TW * dp) / dW
            u[i + 1, j] += (rE + TE * dp) / dE
            if act_s:
                v[i, col_s] += rS - TS * dp
            if act_n:
                v[i, col_n] += rN + TN * dp
            p[i, j] += dp


@njit(cache=True)
def _sweep_fracture(ug, pg, u1if, u2if, Tg, rg, rqg, dy, bod, omega, forward):
    n = pg.shape[0]
    start, stop, step = (0, n, 1) if forward else (n - 1, -1, -1)
    for j in range(start, stop, step):
        ds = 1.0 + bod * abs(ug[j])
        dn = 1.0 + bod * abs(ug[j + 1])
        TS = Tg[j]
        TN = Tg[j + 1]
        if j == 0:
            exprS = ds * ug[0] + TS * pg[0]
        else:
            exprS = ds * ug[j] + TS * (pg[j] - pg[j - 1])
        if j == n - 1:
            exprN = dn * ug[n] - TN * pg[n - 1]
        else:
            exprN = dn * ug[j + 1] + TN * (pg[j + 1] - pg[j])
        rS = rg[j] - exprS
        rN = rg[j + 1] - exprN
        rP = rqg[j] - ((ug[j + 1] - ug[j]) / dy[j] - (u1if[j] - u2if[j]))

        S = (TN / dn + TS / ds) / dy[j]
        dp = (rP - (rN / dn - rS / ds) / dy[j]) / S
        ug[j] += omega * (rS - TS * dp) / ds
        ug[j + 1] += omega * (rN + TN * dp) / dn
        pg[j] += omega * dp


def smoothing_step(
    op: DiscreteOperator,
    x: MixedDimVector,
    cfg: SmootherConfig | None = None,
    rhs: np.ndarray | None = None,
) -> MixedDimVector:
    """One smoothing step: matrix sweeps over both subdomains, then fracture sweeps.

    Mutates ``x`` in place and returns it.  ``rhs`` defaults to the assembled
    natural right-hand side; coarse-level solvers pass their own.
    """
    cfg = cfg or SmootherConfig()
    lay = op.layout
    if rhs is None:
        rhs = op.natural_rhs
    f = op.vector(np.asarray(rhs))
    fwd = cfg.lexicographic
    for _ in range(cfg.matrix_sweeps_per_step):
        for k in (1, 2):
            _sweep_matrix(
                x.view(f"u{k}"), x.view(f"v{k}"), x.view(f"p{k}"), x.pg,
                x.u2[0, :] if k == 1 else x.u1[op.n, :],
                op.Tu[k], op.du_if[k], op.cross[k], op.Tv[k],
                f.view(f"u{k}"), f.view(f"v{k}"), f.view(f"p{k}"),
                op.dx[k], op.dy,
                lay.jv0, lay.v_bottom, lay.v_top, k == 1, fwd,
            )
    for _ in range(cfg.fracture_sweeps_per_step):
        _sweep_fracture(
            x.ug, x.pg, x.u1[op.n, :], x.u2[0, :], op.Tg,
            f.ug, f.pg, op.dy, op.beta_over_d, cfg.omega, fwd,
        )
    return x


# --- explicit local systems (reference path) ---------------------------------


def local_matrix_cell(op: DiscreteOperator, x: MixedDimVector, k: int, i: int, j: int,
                      rhs: np.ndarray | None = None):
    """Dense local increment system of one matrix cell.

    Returns ``(M, r, unknowns)`` with rows/columns ordered (u_west, u_east,
    [v_south,] [v_north,] p) and ``unknowns`` the matching flat indices.
    """
    n = op.n
    lay = op.layout
    f = op.vector(rhs if rhs is not None else op.natural_rhs)
    rnat = op.vector(op.residual_natural(x.data, f.data))
    u_r, v_r, p_r = rnat.view(f"u{k}"), rnat.view(f"v{k}"), rnat.view(f"p{k}")
    Tu, Tv = op.Tu[k], op.Tv[k]

    dW = op.du_if[k][j] if (i == 0 and k == 2) else 1.0
    dE = op.du_if[k][j] if (i == n - 1 and k == 1) else 1.0
    act_s = j > 0 or lay.v_bottom
    act_n = j + 1 < n or lay.v_top

    rows = [
        (lay.idx_u(k, i, j), dW, Tu[i, j], u_r[i, j], -1.0 / op.dx[k][i]),
        (lay.idx_u(k, i + 1, j), dE, -Tu[i + 1, j], u_r[i + 1, j], 1.0 / op.dx[k][i]),
    ]
    if act_s:
        rows.append((lay.idx_v(k, i, j), 1.0, Tv[i, j], v_r[i, j - lay.jv0], -1.0 / op.dy[j]))
    if act_n:
        rows.append((lay.idx_v(k, i, j + 1), 1.0, -Tv[i, j + 1], v_r[i, j + 1 - lay.jv0], 1.0 / op.dy[j]))

    m = len(rows) + 1
    M = np.zeros((m, m))
    r = np.zeros(m)
    unknowns = []
    for a, (idx, diag, grad, res, divc) in enumerate(rows):
        M[a, a] = diag
        M[a, m - 1] = grad
        M[m - 1, a] = divc
        r[a] = res
        unknowns.append(int(idx))
    r[m - 1] = p_r[i, j]
    unknowns.append(int(lay.idx_p(k, i, j)))
    return M, r, unknowns


def smooth_matrix_cell(op: DiscreteOperator, x: MixedDimVector, k: int, i: int, j: int,
                       rhs: np.ndarray | None = None) -> MixedDimVector:
    """Exact local solve for one matrix cell, applied undamped in place."""
    M, r, unknowns = local_matrix_cell(op, x, k, i, j, rhs)
    x.data[unknowns] += np.linalg.solve(M, r)
    return x


def local_fracture_cell(op: DiscreteOperator, x: MixedDimVector, j: int,
                        rhs: np.ndarray | None = None):
    """Dense 3x3 local system of fracture cell ``j``: rows (u_north, u_south, p)."""
    n = op.n
    lay = op.layout
    f = op.vector(rhs if rhs is not None else op.natural_rhs)
    rnat = op.vector(op.residual_natural(x.data, f.data))
    bod = op.beta_over_d
    dn = 1.0 + bod * abs(x.ug[j + 1])
    ds = 1.0 + bod * abs(x.ug[j])
    M = np.array([
        [dn, 0.0, -op.Tg[j + 1]],
        [0.0, ds, op.Tg[j]],
        [1.0 / op.dy[j], -1.0 / op.dy[j], 0.0],
    ])
    r = np.array([rnat.ug[j + 1], rnat.ug[j], rnat.pg[j]])
    unknowns = [int(lay.idx_ug(j + 1)), int(lay.idx_ug(j)), int(lay.idx_pg(j))]
    return M, r, unknowns


def smooth_fracture_cell(op: DiscreteOperator, x: MixedDimVector, j: int,
                         omega: float = 0.7, rhs: np.ndarray | None = None) -> MixedDimVector:
    """Local solve for one fracture cell, applied with damping ``omega``."""
    M, r, unknowns = local_fracture_cell(op, x, j, rhs)
    x.data[unknowns] += omega * np.linalg.solve(M, r)
    return x
