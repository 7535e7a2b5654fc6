"""Discrete interface convolution of the cell averages with the kernel table.

The convolved density at interface j+1/2 is

    c_{j+1/2} = sum_k h * rho_bar_{k+1/2} * W_{j-k}

with rho_bar the arithmetic interface mean and W the cell-averaged kernel
weights, so the sum approximates (rho * eta)(x_{j+1/2}) with the convention
(rho * eta)(x) = integral rho(xi) eta(x - xi) dxi.  The support covers a few
dozen cells, so a direct windowed sum (np.convolve) is used; no transforms.
"""

from __future__ import annotations

import numpy as np

from .errors import ConvolutionWindowError
from .grid import Grid
from .models import KernelTable


def convolve_padded(rho: np.ndarray, table: KernelTable, grid: Grid) -> np.ndarray:
    """Convolved density at the n_cells+1 interior-bounding interfaces.

    ``rho`` is the padded cell array (interior plus ghosts).  Fails fast if
    the ghost region cannot feed the full window at the edge interfaces.
    """
    gw, n = grid.ghost_width, grid.n_cells
    rho_bar = 0.5 * (rho[:-1] + rho[1:])
    # interface p sits between padded cells p and p+1; we need p in
    # [gw-1, gw+n-1], each reading rho_bar[p - m_max .. p - m_min]
    if gw - 1 - table.m_max < 0 or gw + n - 1 - table.m_min > len(rho_bar) - 1:
        raise ConvolutionWindowError(
            f"ghost width {gw} cannot feed kernel window "
            f"[{table.m_min}, {table.m_max}]")
    full = np.convolve(rho_bar, table.weights, mode="full")
    start = gw - 1 - table.m_min
    return grid.h * full[start:start + n + 1]


def interface_convolution(state, table: KernelTable, grid: Grid) -> np.ndarray:
    """Convolved density for a solver state (see :func:`convolve_padded`)."""
    return convolve_padded(state.rho, table, grid)
