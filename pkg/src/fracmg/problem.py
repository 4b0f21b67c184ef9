"""Physical coefficients and boundary data for the matrix/fracture interface model.

The porous matrix obeys a linear velocity/pressure-gradient law with diagonal
permeability; the fracture line obeys the inertial-corrected (quadratic) law
``(1 + (beta/d)|u|) u = -d K_f_tau dp/ds`` with the fracture width ``d``
folded into effective tangential (``K_f_tau * d``) and normal (``K_f_n / d``)
permeabilities.  The coupling of matrix normal fluxes to the fracture pressure
uses the transfer coefficient ``alpha_gamma = 2 K_f_n / d`` and a quadrature
weight ``xi`` in (1/2, 1].

Sources and boundary pressures may be constants or callables; callables are
evaluated at cell centers (sources) or at boundary-edge midpoints (pressures)
on whatever grid the problem is discretized on, so a single ProblemSpec can be
rediscretized on every level of a grid hierarchy.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from .grid import StaggeredGrid, build_grid

ScalarField = Union[float, Callable[[np.ndarray, np.ndarray], np.ndarray]]
LineField = Union[float, Callable[[np.ndarray], np.ndarray]]

IMPERMEABLE = "impermeable"
DIRICHLET = "dirichlet"


class ProblemError(ValueError):
    """Coefficients or boundary data violate the model's admissibility bounds."""


@dataclass(frozen=True)
class HorizontalBoundary:
    """Top or bottom boundary: impermeable (v = 0) or pressure Dirichlet."""

    kind: str = IMPERMEABLE
    pressure: LineField = 0.0

    def __post_init__(self):
        if self.kind not in (IMPERMEABLE, DIRICHLET):
            raise ProblemError(f"unknown horizontal boundary kind {self.kind!r}")


@dataclass(frozen=True)
class ProblemSpec:
    """All coefficients and boundary data of the coupled flow problem.

    Immutable value object; freely shareable between concurrent solves.
    """

    k1_xx: float = 1.0
    k1_yy: float = 1.0
    k2_xx: float = 1.0
    k2_yy: float = 1.0
    kf_tau: float = 1.0
    kf_n: float = 1.0
    beta: float = 0.0
    d: float = 0.01
    xi: float = 0.75
    q1: ScalarField = 0.0
    q2: ScalarField = 0.0
    q_gamma: LineField = 0.0
    p_left: LineField = 0.0
    p_right: LineField = 0.0
    pg_bottom: float = 0.0
    pg_top: float = 0.0
    bottom: HorizontalBoundary = field(default_factory=HorizontalBoundary)
    top: HorizontalBoundary = field(default_factory=HorizontalBoundary)

    def __post_init__(self):
        for name in ("k1_xx", "k1_yy", "k2_xx", "k2_yy", "kf_tau", "kf_n"):
            if getattr(self, name) <= 0.0:
                raise ProblemError(f"{name} must be strictly positive")
        if self.d <= 0.0:
            raise ProblemError("fracture width d must be positive")
        if not (0.5 < self.xi <= 1.0):
            raise ProblemError("xi must lie in (1/2, 1]")
        if self.beta < 0.0:
            raise ProblemError("beta must be nonnegative")

    @property
    def alpha_gamma(self) -> float:
        """Normal transfer coefficient 2 K_f_n / d."""
        return 2.0 * self.kf_n / self.d

    @property
    def beta_over_d(self) -> float:
        return self.beta / self.d

    def k_matrix(self, k: int) -> tuple[float, float]:
        return (self.k1_xx, self.k1_yy) if k == 1 else (self.k2_xx, self.k2_yy)


def alpha_gamma(spec: ProblemSpec) -> float:
    return spec.alpha_gamma


def _evaluate(f, *coords) -> np.ndarray:
    if callable(f):
        return np.asarray(f(*coords), dtype=float)
    shape = coords[0].shape if coords else ()
    return np.full(shape, float(f))


def eval_cell_field(f: ScalarField, grid: StaggeredGrid, k: int) -> np.ndarray:
    """Cell-center values of a subdomain source field, shape (n, n)."""
    xc = grid.x_centers(k)[:, None]
    yc = grid.y_centers[None, :]
    out = _evaluate(f, np.broadcast_to(xc, (grid.n, grid.n)), np.broadcast_to(yc, (grid.n, grid.n)))
    return np.broadcast_to(out, (grid.n, grid.n)).astype(float)


def eval_line_field(f: LineField, coords: np.ndarray) -> np.ndarray:
    out = _evaluate(f, coords)
    return np.broadcast_to(out, coords.shape).astype(float)


def paper_test_problem(h_inv: int, k_f: float, beta: float, xi: float = 0.75):
    """Benchmark configuration: a (0,2)x(0,1) slice with a unit vertical fracture.

    Homogeneous isotropic matrix permeability 1e-9, isotropic fracture
    permeability ``k_f``, width d = 0.01.  Pressure 0 on the left boundary and
    1e6 on the right; impermeable top and bottom; fracture endpoint pressures
    0 (bottom) and 1e6 (top); no sources.  ``h_inv`` is the number of cells
    per unit length, i.e. per subdomain side.

    Returns ``(ProblemSpec, StaggeredGrid)``.
    """
    h_inv = int(h_inv)
    if h_inv < 4 or (h_inv & (h_inv - 1)) != 0:
        raise ProblemError("h_inv must be a power of two >= 4")
    spec = ProblemSpec(
        k1_xx=1e-9,
        k1_yy=1e-9,
        k2_xx=1e-9,
        k2_yy=1e-9,
        kf_tau=k_f,
        kf_n=k_f,
        beta=beta,
        d=0.01,
        xi=xi,
        p_left=0.0,
        p_right=1e6,
        pg_bottom=0.0,
        pg_top=1e6,
        bottom=HorizontalBoundary(IMPERMEABLE),
        top=HorizontalBoundary(IMPERMEABLE),
    )
    grid = build_grid(((0.0, 2.0), (0.0, 1.0)), h_inv)
    return spec, grid
