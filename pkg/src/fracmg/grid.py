"""Staggered mixed-dimensional grid for a rectangle split by a vertical fracture line.

Two tensor-product subdomain meshes meet at the vertical line x = x_gamma and
share the same y-partition, which also serves as the one-dimensional fracture
mesh.  Unknowns are arranged MAC-style: pressures at cell centers, normal
velocities at edge midpoints.  The fracture line carries its own pressure
(cell) and tangential-velocity (edge) unknowns.

Index conventions (0-based, per subdomain, n cells per direction):

* cells       ``(i, j)``   with ``i, j = 0 .. n-1``
* x-edges     ``(iu, j)``  with ``iu = 0 .. n``; ``iu = 0`` is the west
  column, ``iu = n`` the east column.  For subdomain 1 the east column lies
  on the fracture line, for subdomain 2 the west column does.
* y-edges     ``(i, jv)``  with ``jv = 0 .. n``; ``jv = 0`` bottom, ``n`` top.
* fracture    cells ``j = 0 .. n-1`` and edges ``jg = 0 .. n`` along y.

Flat unknown vectors are ordered by blocks (U1, U2, Ug, P1, P2, Pg), with
velocities inside a subdomain block stored u-class first, then v-class, each
row-major.  Impermeable horizontal boundaries remove the corresponding
boundary v-unknowns from the flat layout entirely (see :class:`Layout`).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

BLOCKS = ("U1", "U2", "Ug", "P1", "P2", "Pg")
#: flat storage order of the unknown classes
CLASS_ORDER = ("u1", "v1", "u2", "v2", "ug", "p1", "p2", "pg")


class GridError(ValueError):
    """Invalid grid construction or coarsening request."""


@dataclass(frozen=True)
class Layout:
    """Flat index bookkeeping for one grid resolution.

    ``v_bottom``/``v_top`` control whether the boundary v-rows ``jv = 0`` and
    ``jv = n`` are unknowns (pressure Dirichlet boundary) or eliminated
    (impermeable boundary, v fixed to zero).
    """

    n: int
    v_bottom: bool = True
    v_top: bool = True

    @property
    def jv0(self) -> int:
        """Physical jv-index of the first stored v-column."""
        return 0 if self.v_bottom else 1

    @property
    def n_vcols(self) -> int:
        return self.n + 1 - (not self.v_bottom) - (not self.v_top)

    @cached_property
    def shapes(self) -> dict[str, tuple[int, ...]]:
        n = self.n
        return {
            "u1": (n + 1, n),
            "v1": (n, self.n_vcols),
            "u2": (n + 1, n),
            "v2": (n, self.n_vcols),
            "ug": (n + 1,),
            "p1": (n, n),
            "p2": (n, n),
            "pg": (n,),
        }

    @cached_property
    def offsets(self) -> dict[str, int]:
        off, pos = {}, 0
        for name in CLASS_ORDER:
            off[name] = pos
            pos += int(np.prod(self.shapes[name]))
        return off

    @property
    def total(self) -> int:
        return self.offsets["pg"] + self.n

    def size(self, name: str) -> int:
        return int(np.prod(self.shapes[name]))

    def class_slice(self, name: str) -> slice:
        off = self.offsets[name]
        return slice(off, off + self.size(name))

    @cached_property
    def block_slices(self) -> dict[str, slice]:
        o, s = self.offsets, self.size
        return {
            "U1": slice(o["u1"], o["u1"] + s("u1") + s("v1")),
            "U2": slice(o["u2"], o["u2"] + s("u2") + s("v2")),
            "Ug": self.class_slice("ug"),
            "P1": self.class_slice("p1"),
            "P2": self.class_slice("p2"),
            "Pg": self.class_slice("pg"),
        }

    # flat indices of individual unknowns; iu/jv etc. may be arrays
    def idx_u(self, k: int, iu, j):
        return self.offsets["u1" if k == 1 else "u2"] + np.asarray(iu) * self.n + np.asarray(j)

    def idx_v(self, k: int, i, jv):
        col = np.asarray(jv) - self.jv0
        return self.offsets["v1" if k == 1 else "v2"] + np.asarray(i) * self.n_vcols + col

    def idx_p(self, k: int, i, j):
        return self.offsets["p1" if k == 1 else "p2"] + np.asarray(i) * self.n + np.asarray(j)

    def idx_ug(self, jg):
        return self.offsets["ug"] + np.asarray(jg)

    def idx_pg(self, j):
        return self.offsets["pg"] + np.asarray(j)


@dataclass(frozen=True)
class StaggeredGrid:
    """Two matching rectangular subdomain meshes plus the induced fracture mesh.

    Immutable after construction; spacing arrays are stored per subdomain so
    the assembly formulas stay general even though v1 only builds uniform
    grids.  The fracture sits at ``x = x_gamma``; the physical fracture width
    enters the model only through coefficients, never the geometry.
    """

    nx_sub: int
    ny: int
    x0: float
    x_gamma: float
    x1: float
    y0: float
    y1: float
    dx1: np.ndarray  # (nx_sub,) cell widths, subdomain 1
    dx2: np.ndarray
    dy: np.ndarray  # (ny,) shared cell heights

    def __post_init__(self):
        if self.nx_sub != self.ny:
            raise GridError("v1 supports nx_sub == ny only")
        for arr in (self.dx1, self.dx2, self.dy):
            arr.setflags(write=False)

    @property
    def n(self) -> int:
        return self.nx_sub

    # --- coordinates -----------------------------------------------------
    @cached_property
    def y_edges(self) -> np.ndarray:
        return self.y0 + np.concatenate(([0.0], np.cumsum(self.dy)))

    @cached_property
    def y_centers(self) -> np.ndarray:
        return 0.5 * (self.y_edges[:-1] + self.y_edges[1:])

    def x_edges(self, k: int) -> np.ndarray:
        if k == 1:
            return self.x0 + np.concatenate(([0.0], np.cumsum(self.dx1)))
        return self.x_gamma + np.concatenate(([0.0], np.cumsum(self.dx2)))

    def x_centers(self, k: int) -> np.ndarray:
        xe = self.x_edges(k)
        return 0.5 * (xe[:-1] + xe[1:])

    # --- unknown counting -------------------------------------------------
    def layout(self, v_bottom: bool = True, v_top: bool = True) -> Layout:
        return Layout(self.n, v_bottom=v_bottom, v_top=v_top)

    @property
    def total_unknowns(self) -> int:
        """Count with all classes present (no boundary eliminations)."""
        return self.layout().total

    def class_counts(self) -> dict[str, int]:
        lay = self.layout()
        return {name: lay.size(name) for name in CLASS_ORDER}


def build_grid(domain_extents, cells_per_subdomain: int) -> StaggeredGrid:
    """Build the uniform staggered grid on ``(x0, x1) x (y0, y1)``.

    The fracture line sits at the midpoint ``x_gamma = (x0 + x1) / 2`` and both
    subdomains get ``cells_per_subdomain`` cells in each direction.
    """
    (x0, x1), (y0, y1) = domain_extents
    n = int(cells_per_subdomain)
    if n < 1:
        raise GridError("cells_per_subdomain must be positive")
    if not (x1 > x0 and y1 > y0):
        raise GridError("domain extents must have positive measure")
    x_gamma = 0.5 * (x0 + x1)
    dx = (x1 - x0) / (2 * n)
    dyv = (y1 - y0) / n
    return StaggeredGrid(
        nx_sub=n,
        ny=n,
        x0=x0,
        x_gamma=x_gamma,
        x1=x1,
        y0=y0,
        y1=y1,
        dx1=np.full(n, dx),
        dx2=np.full(n, dx),
        dy=np.full(n, dyv),
    )


def coarsen(grid: StaggeredGrid) -> StaggeredGrid:
    """Halve the cell count per direction (standard geometric coarsening).

    Adjacent fine cells merge pairwise, so the coarse fracture partition is
    again the one induced by both coarse subdomain meshes.
    """
    n = grid.n
    if n < 2 or n % 2 != 0:
        raise GridError(f"grid with {n} cells per subdomain is not coarsenable")
    merge = lambda d: d.reshape(n // 2, 2).sum(axis=1)
    return StaggeredGrid(
        nx_sub=n // 2,
        ny=n // 2,
        x0=grid.x0,
        x_gamma=grid.x_gamma,
        x1=grid.x1,
        y0=grid.y0,
        y1=grid.y1,
        dx1=merge(grid.dx1),
        dx2=merge(grid.dx2),
        dy=merge(grid.dy),
    )
