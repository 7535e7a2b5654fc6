"""Time stepping: datum projection, the explicit update, and the run driver.

One step advances every interior cell by the flux difference

    rho_j <- rho_j - lambda * (flux_{j+1/2} - flux_{j-1/2})

with the convolved density evaluated once per step on the current state.
Ghost cells are refreshed by constant extension of the nearest interior
cell after every step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .convolution import convolve_padded
from .diagnostics import (
    DiagnosticsSeries,
    InvariantMonitor,
    MonitorReport,
    TheoreticalConstants,
    default_k_lattice,
    entropy_residual,
    l1_norm,
    linf_bound,
    linf_norm,
    theoretical_constants,
    total_variation,
    tv_bound,
)
from .errors import BlowupError, InvalidDatumError, StabilityError
from .fluxes import local_flux, numerical_flux  # noqa: F401  (re-exported)
from .grid import Grid, check_mesh_condition, max_stable_lambda

_OVERLAP_TOL = 1e-14


@dataclass
class State:
    """One time level: padded cell averages plus the time t = n * tau."""

    rho: np.ndarray
    t: float
    n: int

    def interior(self, grid: Grid) -> np.ndarray:
        gw = grid.ghost_width
        return self.rho[gw:gw + grid.n_cells]


@dataclass(frozen=True)
class PiecewiseConstantDatum:
    """Initial datum: disjoint (lo, hi, value) pieces over a background value.

    The outermost pieces may extend to -inf / +inf; the value at each
    infinity is the far-field constant used for the ghost cells.
    """

    pieces: tuple[tuple[float, float, float], ...]
    background: float = 0.0

    def __post_init__(self):
        pieces = tuple(sorted(self.pieces))
        for lo, hi, _ in pieces:
            if not hi > lo:
                raise InvalidDatumError(f"empty datum piece [{lo}, {hi}]")
        for (lo1, hi1, _), (lo2, hi2, _) in zip(pieces, pieces[1:]):
            if lo2 < hi1 - _OVERLAP_TOL:
                raise InvalidDatumError(
                    f"datum pieces overlap: [{lo1}, {hi1}] and [{lo2}, {hi2}]")
        object.__setattr__(self, "pieces", pieces)

    @property
    def far_field_left(self) -> float:
        for lo, _, value in self.pieces:
            if lo == -math.inf:
                return value
        return self.background

    @property
    def far_field_right(self) -> float:
        for _, hi, value in self.pieces:
            if hi == math.inf:
                return value
        return self.background


def project_initial_datum(datum: PiecewiseConstantDatum, grid: Grid) -> State:
    """Exact cell averages of the datum; ghost cells get the far-field values."""
    xl = grid.x_min + grid.h * np.arange(grid.n_cells)
    xr = xl + grid.h
    avg = np.full(grid.n_cells, datum.background)
    for lo, hi, value in datum.pieces:
        overlap = np.clip(hi, xl, xr) - np.clip(lo, xl, xr)
        avg += (value - datum.background) * overlap / grid.h
    rho = np.empty(grid.n_total)
    gw = grid.ghost_width
    rho[:gw] = datum.far_field_left
    rho[gw:gw + grid.n_cells] = avg
    rho[gw + grid.n_cells:] = datum.far_field_right
    return State(rho=rho, t=0.0, n=0)


def step(state: State, model, kernel_table, grid: Grid, local: bool = False) -> State:
    """One explicit update of the interior cells; raises BlowupError on NaN/Inf."""
    gw, n = grid.ghost_width, grid.n_cells
    rho = state.rho
    left = rho[gw - 1:gw + n]
    right = rho[gw:gw + n + 1]
    x_if = grid.interfaces()
    if local:
        flux = local_flux(state.t, x_if, left, right, model, grid.lam)
    else:
        c = convolve_padded(rho, kernel_table, grid)
        flux = numerical_flux(state.t, x_if, left, right, c, model, grid.lam)
    interior = rho[gw:gw + n] - grid.lam * (flux[1:] - flux[:-1])
    if not np.all(np.isfinite(interior)):
        bad = int(np.argmin(np.isfinite(interior)))
        raise BlowupError(state.n + 1, bad)
    new_rho = np.empty_like(rho)
    new_rho[gw:gw + n] = interior
    new_rho[:gw] = interior[0]
    new_rho[gw + n:] = interior[-1]
    return State(rho=new_rho, t=(state.n + 1) * grid.tau, n=state.n + 1)


@dataclass
class Snapshot:
    """Interior cell averages stored at (the step nearest to) a requested time."""

    requested_t: float
    t: float
    step: int
    rho: np.ndarray


@dataclass
class Trajectory:
    """Everything a run produces: snapshots, diagnostics, and monitor results."""

    grid: Grid
    model_name: str
    mode: str
    n_steps: int
    snapshots: list[Snapshot]
    series: DiagnosticsSeries
    monitor: MonitorReport
    constants: TheoreticalConstants
    datum_l1: float
    datum_tv: float
    datum_linf: float


def run(config) -> Trajectory:
    """Drive the scheme to t_final for a validated RunConfig.

    Deterministic: an identical config yields a bit-identical trajectory.
    Rejects configurations violating the CFL or mesh condition.
    """
    from .config import instantiate  # late import: config builds on this module

    model, grid, table, datum = instantiate(config)
    lam_star = max_stable_lambda(model)
    if grid.lam > lam_star * (1.0 + 1e-12):
        raise StabilityError(
            f"CFL: lambda {grid.lam:.6g} > lambda* {lam_star:.6g}")
    if not check_mesh_condition(grid, model):
        raise StabilityError(
            f"mesh condition: h {grid.h:.6g} >= 1/C {1.0 / model.C:.6g}")

    local = config.mode == "local"
    state = project_initial_datum(datum, grid)
    datum_l1 = l1_norm(state, grid)
    datum_tv = total_variation(state)
    datum_linf = linf_norm(state)
    constants = theoretical_constants(model, datum_l1, datum_tv, grid.lam)

    n_steps = int(round(config.t_final / grid.tau)) if config.t_final > 0 else 0
    snap_steps = [min(max(int(round(t / grid.tau)), 0), n_steps)
                  for t in config.snapshot_times]
    snap_lookup: dict[int, list[int]] = {}
    for i, s in enumerate(snap_steps):
        snap_lookup.setdefault(s, []).append(i)

    snapshots: list[Snapshot] = [None] * len(snap_steps)  # type: ignore[list-item]

    def take_snapshots(st: State) -> None:
        for i in snap_lookup.get(st.n, []):
            snapshots[i] = Snapshot(requested_t=config.snapshot_times[i],
                                    t=st.t, step=st.n,
                                    rho=st.interior(grid).copy())

    monitor = InvariantMonitor(model, grid, state, constants,
                               strict=config.strict,
                               check_convolution=config.strict,
                               kernel_table=table)
    series = DiagnosticsSeries()
    stride = max(int(config.diag_stride), 1)
    record_steps = set(range(0, n_steps + 1, stride)) | {n_steps} | set(snap_steps)

    def record(prev: State | None, st: State) -> None:
        if not config.diagnostics_on or st.n not in record_steps:
            return
        if prev is None:
            residual = 0.0  # no transition into t=0
        else:
            k = default_k_lattice(prev, st, grid, points=config.entropy_points)
            residual = entropy_residual(prev, st, model, table, grid, k, local=local)
        series.add_row(
            t=st.t,
            l1=l1_norm(st, grid),
            linf=linf_norm(st),
            tv=total_variation(st),
            max_entropy_residual=residual,
            bound_linf=linf_bound(constants.L, datum_linf, st.t),
            bound_tv=tv_bound(constants.K1, constants.K2, datum_tv, st.t),
        )

    monitor.observe(state)
    take_snapshots(state)
    if n_steps > 0:
        record(None, state)
    for _ in range(n_steps):
        prev = state
        state = step(prev, model, table, grid, local=local)
        monitor.observe(state)
        record(prev, state)
        take_snapshots(state)

    return Trajectory(
        grid=grid, model_name=model.name, mode=config.mode, n_steps=n_steps,
        snapshots=snapshots, series=series, monitor=monitor.report(),
        constants=constants, datum_l1=datum_l1, datum_tv=datum_tv,
        datum_linf=datum_linf,
    )
