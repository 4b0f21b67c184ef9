"""Inter-grid transfer operators, one stencil family per unknown class.

Restriction stencils on the staggered arrangement (coarse point marked *):

* x-velocities   (1/8) [1 2 1; * ; 1 2 1]   (six points, column-aligned)
* y-velocities   (1/8) [1 . 1; 2 * 2; 1 . 1] (six points, row-aligned)
* pressures      (1/4) [1 1; * ; 1 1]        (the four fine cells in the coarse cell)
* fracture u_g   (1/4) [1 2 1]
* fracture p_g   (1/2) [1 * 1]

The same operator restricts residuals and current approximations.
Prolongations are the adjoints, ``P = s R^T`` with ``s = 4`` for
two-dimensional classes and ``s = 2`` for one-dimensional ones.

Boundary rows whose stencil would leave the grid are truncated; by default the
surviving weights are renormalized to row sum one (constants restrict to
constants everywhere), with a ``raw`` mode keeping the interior weights
untouched (then ``P`` reproduces coarse constants exactly at every fine point
instead).  The two goals are mutually exclusive at edge-type boundary rows —
the per-class weight totals differ — so both modes are exposed.  Velocity
columns on the fracture line can either join the two-dimensional stencil or be
restricted as one-dimensional cell-type lines along y (the default).

Restrictions are assembled as sparse matrices per class and level, which makes
the adjoint relation between restriction and prolongation exact by
construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .grid import Layout

VELOCITY_2D = ("u1", "v1", "u2", "v2")
SCALE = {  # prolongation scale s per class
    "u1": 4.0,
    "v1": 4.0,
    "u2": 4.0,
    "v2": 4.0,
    "p1": 4.0,
    "p2": 4.0,
    "ug": 2.0,
    "pg": 2.0,
}


@dataclass(frozen=True)
class TransferConfig:
    truncation: str = "renormalized"  # or "raw"
    interface_velocity: str = "line"  # or "stencil2d"

    def __post_init__(self):
        if self.truncation not in ("renormalized", "raw"):
            raise ValueError(self.truncation)
        if self.interface_velocity not in ("line", "stencil2d"):
            raise ValueError(self.interface_velocity)


class _Builder:
    def __init__(self, n_rows: int, n_cols: int, renormalize: bool):
        self.rows, self.cols, self.vals = [], [], []
        self.n_rows, self.n_cols = n_rows, n_cols
        self.renormalize = renormalize

    def row(self, r: int, entries: list[tuple[int, float]]):
        total = sum(w for _, w in entries)
        factor = 1.0 / total if (self.renormalize and total > 0) else 1.0
        for c, w in entries:
            self.rows.append(r)
            self.cols.append(c)
            self.vals.append(w * factor)

    def matrix(self) -> sp.csr_matrix:
        return sp.coo_matrix(
            (self.vals, (self.rows, self.cols)), shape=(self.n_rows, self.n_cols)
        ).tocsr()


def _u_restriction(n: int, iface_east: bool, cfg: TransferConfig) -> sp.csr_matrix:
    """x-velocity class, fine (n+1, n) -> coarse (m+1, m)."""
    m = n // 2
    renorm = cfg.truncation == "renormalized"
    b = _Builder((m + 1) * m, (n + 1) * n, renorm)
    fid = lambda iu, j: iu * n + j
    iface_col = n if iface_east else 0
    line_cols = {iface_col} if cfg.interface_velocity == "line" else set()
    for I in range(m + 1):
        for J in range(m):
            r = I * m + J
            fi = 2 * I
            if fi in line_cols:
                # cell-type averaging along the fracture line
                b.row(r, [(fid(fi, 2 * J), 0.5), (fid(fi, 2 * J + 1), 0.5)])
                continue
            entries = []
            for di, wx in ((-1, 1.0), (0, 2.0), (1, 1.0)):
                col = fi + di
                if col < 0 or col > n or col in line_cols:
                    continue
                for fj in (2 * J, 2 * J + 1):
                    entries.append((fid(col, fj), wx / 8.0))
            b.row(r, entries)
    return b.matrix()


def _v_restriction(n: int, lay_fine: Layout, lay_coarse: Layout, cfg: TransferConfig) -> sp.csr_matrix:
    """y-velocity class on the active columns, fine (n, nvc) -> coarse (m, mvc)."""
    m = n // 2
    renorm = cfg.truncation == "renormalized"
    b = _Builder(m * lay_coarse.n_vcols, n * lay_fine.n_vcols, renorm)
    f0, nvc = lay_fine.jv0, lay_fine.n_vcols
    fid = lambda i, jv: i * nvc + (jv - f0)
    active = lambda jv: f0 <= jv < f0 + nvc
    for I in range(m):
        for Jv in range(lay_coarse.jv0, lay_coarse.jv0 + lay_coarse.n_vcols):
            r = I * lay_coarse.n_vcols + (Jv - lay_coarse.jv0)
            fj = 2 * Jv
            entries = []
            for dj, wy in ((-1, 1.0), (0, 2.0), (1, 1.0)):
                col = fj + dj
                if not (0 <= col <= n) or not active(col):
                    continue
                for fi in (2 * I, 2 * I + 1):
                    entries.append((fid(fi, col), wy / 8.0))
            b.row(r, entries)
    return b.matrix()


def _p_restriction(n: int) -> sp.csr_matrix:
    m = n // 2
    b = _Builder(m * m, n * n, renormalize=False)
    for I in range(m):
        for J in range(m):
            entries = [
                (fi * n + fj, 0.25)
                for fi in (2 * I, 2 * I + 1)
                for fj in (2 * J, 2 * J + 1)
            ]
            b.row(I * m + J, entries)
    return b.matrix()


def _ug_restriction(n: int, cfg: TransferConfig) -> sp.csr_matrix:
    m = n // 2
    b = _Builder(m + 1, n + 1, cfg.truncation == "renormalized")
    for J in range(m + 1):
        entries = []
        for dj, w in ((-1, 1.0), (0, 2.0), (1, 1.0)):
            col = 2 * J + dj
            if 0 <= col <= n:
                entries.append((col, w / 4.0))
        b.row(J, entries)
    return b.matrix()


def _pg_restriction(n: int) -> sp.csr_matrix:
    m = n // 2
    b = _Builder(m, n, renormalize=False)
    for J in range(m):
        b.row(J, [(2 * J, 0.5), (2 * J + 1, 0.5)])
    return b.matrix()


class TransferPair:
    """Restrictions and adjoint prolongations between one fine/coarse level pair."""

    def __init__(self, fine_layout: Layout, cfg: TransferConfig | None = None):
        n = fine_layout.n
        if n % 2 != 0 or n < 2:
            raise ValueError(f"level with {n} cells per subdomain is not coarsenable")
        self.cfg = cfg or TransferConfig()
        self.fine = fine_layout
        self.coarse = Layout(n // 2, v_bottom=fine_layout.v_bottom, v_top=fine_layout.v_top)
        vmat = _v_restriction(n, fine_layout, self.coarse, self.cfg)
        self.R = {
            "u1": _u_restriction(n, iface_east=True, cfg=self.cfg),
            "u2": _u_restriction(n, iface_east=False, cfg=self.cfg),
            "v1": vmat,
            "v2": vmat,
            "p1": _p_restriction(n),
            "p2": _p_restriction(n),
            "ug": _ug_restriction(n, self.cfg),
            "pg": _pg_restriction(n),
        }

    def restrict(self, name: str, fine_field: np.ndarray) -> np.ndarray:
        R = self.R[name]
        flat = np.asarray(fine_field, dtype=float).ravel()
        if flat.shape[0] != R.shape[1]:
            raise ValueError(f"{name}: expected {R.shape[1]} fine values, got {flat.shape[0]}")
        return (R @ flat).reshape(self.coarse.shapes[name])

    def prolong(self, name: str, coarse_field: np.ndarray) -> np.ndarray:
        R = self.R[name]
        flat = np.asarray(coarse_field, dtype=float).ravel()
        if flat.shape[0] != R.shape[0]:
            raise ValueError(f"{name}: expected {R.shape[0]} coarse values, got {flat.shape[0]}")
        return (SCALE[name] * (R.T @ flat)).reshape(self.fine.shapes[name])

    def restrict_vector(self, fine_data: np.ndarray) -> np.ndarray:
        out = np.empty(self.coarse.total)
        for name, R in self.R.items():
            out[self.coarse.class_slice(name)] = R @ fine_data[self.fine.class_slice(name)]
        return out

    def prolong_vector(self, coarse_data: np.ndarray) -> np.ndarray:
        out = np.empty(self.fine.total)
        for name, R in self.R.items():
            out[self.fine.class_slice(name)] = SCALE[name] * (
                R.T @ coarse_data[self.coarse.class_slice(name)]
            )
        return out


def restrict(pair: TransferPair, name: str, fine_field: np.ndarray) -> np.ndarray:
    return pair.restrict(name, fine_field)


def prolong(pair: TransferPair, name: str, coarse_field: np.ndarray) -> np.ndarray:
    return pair.prolong(name, coarse_field)
