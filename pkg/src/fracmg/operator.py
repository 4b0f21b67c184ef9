"""Mixed-dimensional finite-volume operator, right-hand side and Jacobian.

Discrete equations (natural form), written per row class with two-point flux
transmissibilities.  ``T`` denotes the harmonic-average edge coefficient and
``a`` the one-sided coefficient of the half-cell next to the fracture line:

* interior x-momentum      ``u + T (p_E - p_W) = 0``
* outer boundary momentum  ``u + T (p - g) = 0`` (ghost value g on the
  Dirichlet side; one-sided ``T = 2 K / dx``)
* fracture-line coupling   ``(1 + xi a / alpha) u_k + a (p_g - p_k) * s_k
  + ((1 - xi) a / alpha) u_other = 0`` with ``s_1 = +1`` for the subdomain-1
  east column and the mirrored signs for subdomain 2
* fracture tangential momentum ``(1 + (beta/d)|u_g|) u_g + T_g (p_g,N - p_g,S) = 0``
* cell mass balance        ``(u_E - u_W)/dx + (v_N - v_S)/dy = q``
* fracture mass balance    ``(u_g,N - u_g,S)/dy - (u1_east - u2_west) = q_g``

A fixed positive row scaling turns the linearization into the symmetric
saddle-point form (gradient blocks equal transposed divergence blocks, the
cross-subdomain velocity coupling symmetric): x-momentum rows scale by
``dy/T``, y-momentum rows by ``dx/T``, fracture momentum rows by ``1/T_g``,
and mass rows by the negative cell measure.  All public residual/Jacobian
entry points return the scaled form; ``residual_natural`` keeps the raw
equations for the multigrid internals, whose transfer stencils are calibrated
to residuals of the unscaled (PDE-consistent) rows.

Impermeable horizontal boundaries are handled by elimination: the boundary
v-unknowns and their rows never enter the flat vector and the adjacent mass
rows simply drop those flux terms.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .grid import Layout, StaggeredGrid
from .problem import DIRICHLET, ProblemSpec, eval_cell_field, eval_line_field


class MixedDimVector:
    """Flat block vector (U1, U2, Ug, P1, P2, Pg) over a staggered grid.

    ``data`` is one contiguous float array; the named accessors are reshaped
    views into it, so in-place edits through a view mutate the vector.
    """

    __slots__ = ("data", "layout")

    def __init__(self, data: np.ndarray, layout: Layout):
        data = np.asarray(data, dtype=float)
        if data.shape != (layout.total,):
            raise ValueError(f"expected length {layout.total}, got {data.shape}")
        self.data = data
        self.layout = layout

    @classmethod
    def zeros(cls, layout: Layout) -> "MixedDimVector":
        return cls(np.zeros(layout.total), layout)

    def copy(self) -> "MixedDimVector":
        return MixedDimVector(self.data.copy(), self.layout)

    def view(self, name: str) -> np.ndarray:
        lay = self.layout
        return self.data[lay.class_slice(name)].reshape(lay.shapes[name])

    def block(self, name: str) -> np.ndarray:
        return self.data[self.layout.block_slices[name]]

    @property
    def u1(self):
        return self.view("u1")

    @property
    def v1(self):
        return self.view("v1")

    @property
    def p1(self):
        return self.view("p1")

    @property
    def u2(self):
        return self.view("u2")

    @property
    def v2(self):
        return self.view("v2")

    @property
    def p2(self):
        return self.view("p2")

    @property
    def ug(self):
        return self.view("ug")

    @property
    def pg(self):
        return self.view("pg")


@dataclass
class BlockOperator:
    """Scaled linearization at a state, exposed block-wise.

    ``matrix`` is the full sparse operator in flat layout order; the named
    blocks slice it.  Momentum blocks A1/A2/Ag are diagonal, the velocity
    cross-coupling C is symmetric and the gradient blocks are the transposes
    of the divergence blocks B1/B2/Bg and interface-flux blocks F1/F2.
    """

    matrix: sp.csr_matrix
    rhs: np.ndarray
    layout: Layout

    def _block(self, rows: str, cols: str) -> sp.csr_matrix:
        bs = self.layout.block_slices
        return self.matrix[bs[rows], :][:, bs[cols]]

    @property
    def A1(self):
        return self._block("U1", "U1")

    @property
    def A2(self):
        return self._block("U2", "U2")

    @property
    def Ag(self):
        return self._block("Ug", "Ug")

    @property
    def C(self):
        return self._block("U2", "U1")

    @property
    def B1(self):
        return self._block("P1", "U1")

    @property
    def B2(self):
        return self._block("P2", "U2")

    @property
    def Bg(self):
        return self._block("Pg", "Ug")

    @property
    def F1(self):
        return self._block("Pg", "U1")

    @property
    def F2(self):
        return self._block("Pg", "U2")

    def gradient_block(self, k: int) -> sp.csr_matrix:
        return self._block("U1" if k == 1 else "U2", "P1" if k == 1 else "P2")

    def fracture_gradient_block(self) -> sp.csr_matrix:
        return self._block("Ug", "Pg")

    def interface_gradient_block(self, k: int) -> sp.csr_matrix:
        return self._block("U1" if k == 1 else "U2", "Pg")


class DiscreteOperator:
    """Assembled coefficient arrays for one (spec, grid) pair.

    Everything the residual evaluation, the smoother kernels and the sparse
    matrix builders need is precomputed here: per-edge transmissibilities,
    interface diagonals and cross-coefficients, boundary-data folds and cell
    sources.  Instances are immutable in practice and shared across threads.
    """

    def __init__(self, spec: ProblemSpec, grid: StaggeredGrid):
        self.spec = spec
        self.grid = grid
        n = grid.n
        self.n = n
        self.layout = grid.layout(
            v_bottom=spec.bottom.kind == DIRICHLET,
            v_top=spec.top.kind == DIRICHLET,
        )
        self.dy = np.asarray(grid.dy)
        self.dx = {1: np.asarray(grid.dx1), 2: np.asarray(grid.dx2)}
        alpha = spec.alpha_gamma
        self.beta_over_d = spec.beta_over_d

        self.Tu, self.du_if, self.cross, self.bu = {}, {}, {}, {}
        self.Tv, self.bv = {}, {}
        self.q = {}
        yc = grid.y_centers
        for k in (1, 2):
            kxx, kyy = spec.k_matrix(k)
            kxx_c = np.full((n, n), kxx)
            kyy_c = np.full((n, n), kyy)
            dx = self.dx[k]

            Tu = np.empty((n + 1, n))
            Tu[1:n] = 2.0 / (
                (dx[:-1, None] / kxx_c[:-1]) + (dx[1:, None] / kxx_c[1:])
            )
            Tu[0] = 2.0 * kxx_c[0] / dx[0]
            Tu[n] = 2.0 * kxx_c[n - 1] / dx[n - 1]
            self.Tu[k] = Tu

            a = Tu[n] if k == 1 else Tu[0]  # one-sided coefficient at the fracture line
            self.du_if[k] = 1.0 + spec.xi * a / alpha
            self.cross[k] = (1.0 - spec.xi) * a / alpha

            bu = np.zeros((n + 1, n))
            if k == 1:
                bu[0] = Tu[0] * eval_line_field(spec.p_left, yc)
            else:
                bu[n] = -Tu[n] * eval_line_field(spec.p_right, yc)
            self.bu[k] = bu

            Tv = np.empty((n, n + 1))
            Tv[:, 1:n] = 2.0 / (
                (self.dy[None, :-1] / kyy_c[:, :-1]) + (self.dy[None, 1:] / kyy_c[:, 1:])
            )
            Tv[:, 0] = 2.0 * kyy_c[:, 0] / self.dy[0]
            Tv[:, n] = 2.0 * kyy_c[:, n - 1] / self.dy[n - 1]
            self.Tv[k] = Tv

            bv = np.zeros((n, n + 1))
            xc = grid.x_centers(k)
            if spec.bottom.kind == DIRICHLET:
                bv[:, 0] = Tv[:, 0] * eval_line_field(spec.bottom.pressure, xc)
            if spec.top.kind == DIRICHLET:
                bv[:, n] = -Tv[:, n] * eval_line_field(spec.top.pressure, xc)
            self.bv[k] = bv

            self.q[k] = eval_cell_field(spec.q1 if k == 1 else spec.q2, grid, k)

        kf_line = np.full(n, spec.kf_tau)
        Tg = np.empty(n + 1)
        Tg[1:n] = 2.0 * spec.d / (self.dy[:-1] / kf_line[:-1] + self.dy[1:] / kf_line[1:])
        Tg[0] = 2.0 * spec.d * kf_line[0] / self.dy[0]
        Tg[n] = 2.0 * spec.d * kf_line[n - 1] / self.dy[n - 1]
        self.Tg = Tg
        bg = np.zeros(n + 1)
        bg[0] = Tg[0] * spec.pg_bottom
        bg[n] = -Tg[n] * spec.pg_top
        self.bg = bg
        self.qg = eval_line_field(spec.q_gamma, yc)

    # --- vectors -----------------------------------------------------------
    def zero_state(self) -> MixedDimVector:
        return MixedDimVector.zeros(self.layout)

    @cached_property
    def natural_rhs(self) -> np.ndarray:
        """Unscaled right-hand side: boundary-data folds plus cell sources."""
        f = MixedDimVector.zeros(self.layout)
        lay = self.layout
        for k in (1, 2):
            f.view(f"u{k}")[:] = self.bu[k]
            f.view(f"v{k}")[:] = self.bv[k][:, lay.jv0 : lay.jv0 + lay.n_vcols]
            f.view(f"p{k}")[:] = self.q[k]
        f.ug[:] = self.bg
        f.pg[:] = self.qg
        return f.data

    @cached_property
    def row_scale(self) -> np.ndarray:
        """Diagonal turning natural rows into the symmetric saddle-point form."""
        s = MixedDimVector.zeros(self.layout)
        lay = self.layout
        for k in (1, 2):
            s.view(f"u{k}")[:] = self.dy[None, :] / self.Tu[k]
            Tv = self.Tv[k][:, lay.jv0 : lay.jv0 + lay.n_vcols]
            s.view(f"v{k}")[:] = self.dx[k][:, None] / Tv
            s.view(f"p{k}")[:] = -self.dx[k][:, None] * self.dy[None, :]
        s.ug[:] = 1.0 / self.Tg
        s.pg[:] = -self.dy
        return s.data

    def vector(self, data: np.ndarray) -> MixedDimVector:
        return MixedDimVector(data, self.layout)

    # --- residuals -----------------------------------------------------------
    def operator_natural(self, xdata: np.ndarray) -> np.ndarray:
        """Action of the nonlinear operator (no data terms), natural rows."""
        n = self.n
        x = self.vector(xdata)
        out = MixedDimVector.zeros(self.layout)
        lay = self.layout
        pg = x.pg
        iface_u = {1: x.u1[n, :], 2: x.u2[0, :]}
        for k in (1, 2):
            u = x.view(f"u{k}")
            v = x.view(f"v{k}")
            p = x.view(f"p{k}")
            Tu, Tv = self.Tu[k], self.Tv[k]

            eu = out.view(f"u{k}")
            eu[:] = u
            eu[1:n] += Tu[1:n] * (p[1:] - p[:-1])
            if k == 1:
                eu[0] += Tu[0] * p[0]
                eu[n] = self.du_if[1] * u[n] + Tu[n] * (pg - p[n - 1]) + self.cross[1] * iface_u[2]
            else:
                eu[0] = self.du_if[2] * u[0] + Tu[0] * (p[0] - pg) + self.cross[2] * iface_u[1]
                eu[n] -= Tu[n] * p[n - 1]

            ev = out.view(f"v{k}")
            jv = np.arange(lay.jv0, lay.jv0 + lay.n_vcols)
            ev[:] = v
            for col, jphys in enumerate(jv):
                if jphys == 0:
                    ev[:, col] += Tv[:, 0] * p[:, 0]
                elif jphys == n:
                    ev[:, col] -= Tv[:, n] * p[:, n - 1]
                else:
                    ev[:, col] += Tv[:, jphys] * (p[:, jphys] - p[:, jphys - 1])

            vfull = np.zeros((n, n + 1))
            vfull[:, lay.jv0 : lay.jv0 + lay.n_vcols] = v
            div = (u[1:] - u[:-1]) / self.dx[k][:, None] + (
                vfull[:, 1:] - vfull[:, :-1]
            ) / self.dy[None, :]
            out.view(f"p{k}")[:] = div

        ug = x.ug
        diag = 1.0 + self.beta_over_d * np.abs(ug)
        eg = out.ug
        eg[:] = diag * ug
        eg[1:n] += self.Tg[1:n] * (pg[1:] - pg[:-1])
        eg[0] += self.Tg[0] * pg[0]
        eg[n] -= self.Tg[n] * pg[n - 1]

        out.pg[:] = (ug[1:] - ug[:-1]) / self.dy - (iface_u[1] - iface_u[2])
        return out.data

    def residual_natural(self, xdata: np.ndarray, rhs: np.ndarray | None = None) -> np.ndarray:
        if rhs is None:
            rhs = self.natural_rhs
        return rhs - self.operator_natural(xdata)

    def residual_scaled(self, xdata: np.ndarray) -> np.ndarray:
        return self.row_scale * self.residual_natural(xdata)

    def scaled_norm(self, natural_residual: np.ndarray) -> float:
        return float(np.linalg.norm(self.row_scale * natural_residual))

    # --- sparse matrices -------------------------------------------------------
    def matrix(self, xdata: np.ndarray, mode: str = "newton", scaled: bool = True) -> sp.csr_matrix:
        """Sparse linearization at ``xdata``.

        ``mode="newton"`` differentiates the fracture momentum diagonal
        (derivative 1 + 2 (beta/d)|u_g|); ``mode="picard"`` freezes it at
        1 + (beta/d)|u_g|.  Every other block is state-independent.
        """
        if mode not in ("newton", "picard"):
            raise ValueError(mode)
        n = self.n
        lay = self.layout
        x = self.vector(xdata)
        rows, cols, vals = [], [], []

        def add(r, c, v, vs):
            # vs: closed-form scaled entry.  Writing those directly (instead of
            # multiplying the natural value by the row scale) keeps the
            # gradient/divergence transposition and the C-symmetry exact to
            # the bit.
            r = np.asarray(r)
            val = vs if scaled else v
            rows.append(r.ravel())
            cols.append(np.broadcast_to(np.asarray(c), r.shape).ravel())
            vals.append(np.broadcast_to(np.asarray(val, dtype=float), r.shape).ravel())

        def add_diag(r, v):
            # diagonal entries: scaled form is just row_scale * natural
            r = np.asarray(r)
            rflat = r.ravel()
            vflat = np.broadcast_to(np.asarray(v, dtype=float), r.shape).ravel()
            if scaled:
                vflat = self.row_scale[rflat] * vflat
            rows.append(rflat)
            cols.append(rflat)
            vals.append(vflat)

        dy = self.dy
        dyr = dy[None, :]
        iu_all, j_all = np.meshgrid(np.arange(n + 1), np.arange(n), indexing="ij")
        i_int, j_int = np.meshgrid(np.arange(1, n), np.arange(n), indexing="ij")
        jrange = np.arange(n)
        alpha = self.spec.alpha_gamma
        cross_scaled = (1.0 - self.spec.xi) * dy / alpha  # identical for both rows
        for k in (1, 2):
            Tu = self.Tu[k]
            du = np.ones((n + 1, n))
            if k == 1:
                du[n] = self.du_if[1]
            else:
                du[0] = self.du_if[2]
            add_diag(lay.idx_u(k, iu_all, j_all), du)
            # interior pressure gradient
            rint = lay.idx_u(k, i_int, j_int)
            add(rint, lay.idx_p(k, i_int, j_int), Tu[1:n], dyr)
            add(rint, lay.idx_p(k, i_int - 1, j_int), -Tu[1:n], -dyr)
            if k == 1:
                add(lay.idx_u(1, 0, jrange), lay.idx_p(1, 0, jrange), Tu[0], dy)
                r = lay.idx_u(1, n, jrange)
                add(r, lay.idx_pg(jrange), Tu[n], dy)
                add(r, lay.idx_p(1, n - 1, jrange), -Tu[n], -dy)
                add(r, lay.idx_u(2, 0, jrange), self.cross[1], cross_scaled)
            else:
                r = lay.idx_u(2, 0, jrange)
                add(r, lay.idx_p(2, 0, jrange), Tu[0], dy)
                add(r, lay.idx_pg(jrange), -Tu[0], -dy)
                add(r, lay.idx_u(1, n, jrange), self.cross[2], cross_scaled)
                add(lay.idx_u(2, n, jrange), lay.idx_p(2, n - 1, jrange), -Tu[n], -dy)

            Tv = self.Tv[k]
            dx = self.dx[k]
            irange = np.arange(n)
            for jphys in range(lay.jv0, lay.jv0 + lay.n_vcols):
                r = lay.idx_v(k, irange, jphys)
                add_diag(r, np.ones(n))
                if jphys == 0:
                    add(r, lay.idx_p(k, irange, 0), Tv[:, 0], dx)
                elif jphys == n:
                    add(r, lay.idx_p(k, irange, n - 1), -Tv[:, n], -dx)
                else:
                    add(r, lay.idx_p(k, irange, jphys), Tv[:, jphys], dx)
                    add(r, lay.idx_p(k, irange, jphys - 1), -Tv[:, jphys], -dx)

            # mass rows
            ci, cj = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
            prows = lay.idx_p(k, ci, cj)
            inv_dx = 1.0 / dx[:, None] * np.ones((n, n))
            add(prows, lay.idx_u(k, ci + 1, cj), inv_dx, -dyr)
            add(prows, lay.idx_u(k, ci, cj), -inv_dx, dyr)
            inv_dy = np.ones((n, n)) / dyr
            for jphys in range(n + 1):
                active = (jphys > 0 or lay.v_bottom) and (jphys < n or lay.v_top)
                if not active:
                    continue
                dxc = dx[:, None]
                if jphys < n:  # south edge of cell column jphys
                    add(lay.idx_p(k, irange[:, None], jphys),
                        lay.idx_v(k, irange[:, None], jphys),
                        -inv_dy[:, jphys : jphys + 1], dxc)
                if jphys > 0:  # north edge of cell column jphys-1
                    add(lay.idx_p(k, irange[:, None], jphys - 1),
                        lay.idx_v(k, irange[:, None], jphys),
                        inv_dy[:, jphys - 1 : jphys], -dxc)

        # fracture momentum
        c = 2.0 if mode == "newton" else 1.0
        jg = np.arange(n + 1)
        add_diag(lay.idx_ug(jg), 1.0 + c * self.beta_over_d * np.abs(x.ug))
        jint = np.arange(1, n)
        add(lay.idx_ug(jint), lay.idx_pg(jint), self.Tg[1:n], 1.0)
        add(lay.idx_ug(jint), lay.idx_pg(jint - 1), -self.Tg[1:n], -1.0)
        add(lay.idx_ug(0), lay.idx_pg(0), self.Tg[0], 1.0)
        add(lay.idx_ug(n), lay.idx_pg(n - 1), -self.Tg[n], -1.0)

        # fracture mass
        pr = lay.idx_pg(jrange)
        add(pr, lay.idx_ug(jrange + 1), 1.0 / dy, -1.0)
        add(pr, lay.idx_ug(jrange), -1.0 / dy, 1.0)
        add(pr, lay.idx_u(1, n, jrange), -np.ones(n), dy)
        add(pr, lay.idx_u(2, 0, jrange), np.ones(n), -dy)

        m = sp.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(lay.total, lay.total),
        )
        return m.tocsr()


# --- module-level entry points -------------------------------------------------


def assemble_rhs(spec: ProblemSpec, grid: StaggeredGrid) -> MixedDimVector:
    """Scaled right-hand side (boundary data in momentum rows, sources in mass rows)."""
    op = DiscreteOperator(spec, grid)
    return op.vector(op.row_scale * op.natural_rhs)


def apply(spec: ProblemSpec, grid: StaggeredGrid, x: MixedDimVector) -> MixedDimVector:
    """Scaled residual ``r = f - A(x)`` at the state ``x``."""
    op = DiscreteOperator(spec, grid)
    if x.layout != op.layout:
        raise ValueError("state layout does not match the problem's layout")
    return op.vector(op.residual_scaled(x.data))


def jacobian(spec: ProblemSpec, grid: StaggeredGrid, x: MixedDimVector) -> BlockOperator:
    """Exact scaled Jacobian at ``x`` with the block accessors of the saddle system."""
    op = DiscreteOperator(spec, grid)
    if x.layout != op.layout:
        raise ValueError("state layout does not match the problem's layout")
    mat = op.matrix(x.data, mode="newton", scaled=True)
    return BlockOperator(matrix=mat, rhs=op.row_scale * op.natural_rhs, layout=op.layout)
