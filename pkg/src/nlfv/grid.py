"""Uniform space-time mesh and stability conditions.

The solver works on a uniform mesh of ``n_cells`` cells of width ``h`` over
[x_min, x_max], extended on each side by ``ghost_width`` ghost cells that hold
a constant extension of the nearest interior value.  The time step is
``tau = lam * h`` with ``lam`` fixed for the whole run.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import InvalidGeometryError

# Fallback stability cap when the velocity bound is zero (flux never moves).
UNBOUNDED_LAMBDA_CAP = 1e6


@dataclass(frozen=True)
class Grid:
    """Immutable uniform mesh. Safe to share across concurrent runs."""

    x_min: float
    x_max: float
    h: float
    tau: float
    lam: float
    n_cells: int
    ghost_width: int

    @property
    def n_total(self) -> int:
        """Cell count including ghosts."""
        return self.n_cells + 2 * self.ghost_width

    def cell_centers(self) -> np.ndarray:
        """Centers of the interior cells."""
        return self.x_min + (np.arange(self.n_cells) + 0.5) * self.h

    def interfaces(self) -> np.ndarray:
        """The n_cells+1 interior-bounding interface positions."""
        return self.x_min + np.arange(self.n_cells + 1) * self.h


def build_grid(x_min: float, x_max: float, n_cells: int, lam: float,
               kernel_radius: float = 0.0) -> Grid:
    """Build a uniform grid with ghost cells wide enough for the kernel window.

    ``ghost_width = ceil(kernel_radius / h) + 1`` so the interface convolution
    never reads past the stored cells.
    """
    if x_max <= x_min:
        raise InvalidGeometryError(f"empty domain: [{x_min}, {x_max}]")
    if n_cells < 2:
        raise InvalidGeometryError(f"need at least 2 cells, got {n_cells}")
    if lam <= 0.0:
        raise InvalidGeometryError(f"lambda must be positive, got {lam}")
    if kernel_radius < 0.0:
        raise InvalidGeometryError(f"kernel radius must be >= 0, got {kernel_radius}")
    h = (x_max - x_min) / n_cells
    return Grid(
        x_min=float(x_min),
        x_max=float(x_max),
        h=h,
        tau=lam * h,
        lam=float(lam),
        n_cells=int(n_cells),
        ghost_width=math.ceil(kernel_radius / h) + 1,
    )


def check_mesh_condition(grid: Grid, model) -> bool:
    """True iff h < 1/C for the model's x-dependence constant C.

    C = 0 (flux with no explicit x-dependence) always passes.
    """
    if model.C == 0.0:
        return True
    return grid.h < 1.0 / model.C


def max_stable_lambda(model, cap: float = UNBOUNDED_LAMBDA_CAP) -> float:
    """Largest stable mesh ratio: 1 / (6 (1 + 2 ||df/drho||) ||v||).

    If the velocity bound is zero the ratio is unconstrained; return ``cap``
    and warn.
    """
    if model.norm_v == 0.0:
        warnings.warn("velocity bound is zero; lambda is unconstrained, returning cap",
                      stacklevel=2)
        return cap
    return 1.0 / (6.0 * (1.0 + 2.0 * model.norm_dr_f) * model.norm_v)
