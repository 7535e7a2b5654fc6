"""Norms, total variation, entropy residual, and theoretical growth bounds.

The growth/bound constants are the closed-form expressions attached to the
scheme's stability estimates; they are evaluated from model norm metadata and
the discrete initial datum, and checked against the running solution by
:class:`InvariantMonitor`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .convolution import convolve_padded
from .errors import InvariantViolationError
from .grid import Grid, max_stable_lambda

# exp(709) ~ 8.2e307: largest exponent that keeps bounds finite in float64.
_EXP_CAP = 709.0

POSITIVITY_TOL = 1e-12
FLAT_LEVEL_TOL = 1e-12
L1_DRIFT_RTOL = 1e-12
BOUND_RSLACK = 1e-9


# ---------------------------------------------------------------------------
# norms
# ---------------------------------------------------------------------------

def _interior(state_or_array, grid: Grid) -> np.ndarray:
    if isinstance(state_or_array, np.ndarray):
        arr = state_or_array
        if len(arr) == grid.n_cells:
            return arr
        if len(arr) == grid.n_total:
            return arr[grid.ghost_width:grid.ghost_width + grid.n_cells]
        raise ValueError(f"array length {len(arr)} matches neither interior "
                         f"({grid.n_cells}) nor padded ({grid.n_total}) size")
    return state_or_array.interior(grid)


def l1_norm(state, grid: Grid) -> float:
    """Discrete L1 norm h * sum |rho_j| over the interior cells."""
    return float(grid.h * np.sum(np.abs(_interior(state, grid))))


def linf_norm(state) -> float:
    """Sup norm over all stored cells (ghosts repeat the far field)."""
    return float(np.max(np.abs(state.rho)))


def total_variation(state) -> float:
    """Sum of absolute neighbor differences, far-field jumps included."""
    return float(np.sum(np.abs(np.diff(state.rho))))


def l1_distance(s1, s2, grid: Grid) -> float:
    """h * sum |rho1_j - rho2_j| over interior cells of a shared grid."""
    a = _interior(s1, grid)
    b = _interior(s2, grid)
    if len(a) != len(b):
        raise ValueError(f"state lengths differ: {len(a)} vs {len(b)}")
    return float(grid.h * np.sum(np.abs(a - b)))


# ---------------------------------------------------------------------------
# theoretical bound constants
# ---------------------------------------------------------------------------

def _capped_growth(prefactor: float, exponent: float) -> float:
    """prefactor * e^exponent, saturating at float64 max instead of inf."""
    if prefactor <= 0.0:
        return 0.0
    return math.exp(min(math.log(prefactor) + exponent, _EXP_CAP))


def linf_bound(L: float, linf0: float, t: float) -> float:
    """Sup-norm growth bound linf0 * e^(L t)."""
    return _capped_growth(linf0, L * t)


def tv_bound(K1: float, K2: float, tv0: float, t: float) -> float:
    """Total-variation growth bound (K2 t + tv0) * e^(K1 t)."""
    return _capped_growth(K2 * t + tv0, K1 * t)


@dataclass(frozen=True)
class TheoreticalConstants:
    """Closed-form growth constants for a (model, datum, lambda) combination."""

    L: float
    K1: float
    K2: float
    lambda_star: float
    C_of_T: Callable[[float], float]


def theoretical_constants(model, datum_l1: float, datum_tv: float,
                          lam: float) -> TheoreticalConstants:
    """Evaluate the growth constants from model norms and the discrete datum.

    Sobolev norms of the kernel derivative and of v are taken as the max of
    the relevant derivative sup norms.
    """
    k = model.kernel
    L = model.C * model.norm_v + model.norm_dr_f * model.norm_dv * datum_l1 * k.norm_deta
    K1 = (0.5 * model.norm_dr_f * model.norm_dv * datum_l1 * k.norm_deta
          + model.norm_dxr_f * model.norm_v)
    w1_eta = max(k.norm_deta, k.norm_d2eta)
    w2_v = max(model.norm_v, model.norm_dv, model.norm_d2v)
    K2 = ((1.5 * model.C
           + (model.norm_dr_f + model.C) * w1_eta * datum_l1
           + 0.5 * (model.C + model.norm_dr_f * (2.0 + datum_l1 * k.norm_deta)) * w1_eta)
          * w2_v * datum_l1)

    steady = (model.C * model.norm_v * datum_l1
              + 2.0 * model.norm_dr_f * datum_l1 ** 2 * k.norm_deta * model.norm_dv)
    growth_factor = model.norm_dr_f * model.norm_v + lam / 3.0

    def C_of_T(t: float) -> float:
        return steady + _capped_growth(growth_factor * (K2 * t + datum_tv), K1 * t)

    return TheoreticalConstants(L=L, K1=K1, K2=K2,
                                lambda_star=max_stable_lambda(model),
                                C_of_T=C_of_T)


# ---------------------------------------------------------------------------
# discrete entropy residual
# ---------------------------------------------------------------------------

def default_k_lattice(prev, nxt, grid: Grid, points: int = 41,
                      margin: float = 0.1) -> np.ndarray:
    """Uniform k values spanning the realized state range plus a margin."""
    lo = min(float(np.min(prev.rho)), float(np.min(nxt.rho))) - margin
    hi = max(float(np.max(prev.rho)), float(np.max(nxt.rho))) + margin
    return np.linspace(lo, hi, points)


def entropy_residual(prev, nxt, model, kernel_table, grid: Grid,
                     k_values, local: bool = False) -> float:
    """Worst cell-wise violation of the discrete entropy inequality.

    For each constant k the inequality bounds

        |rho'_j - k| - |rho_j - k|
        + lambda (F_{j+1/2} - F_{j-1/2})
        + lambda sgn(rho'_j - k) (f(t, x_{j+1/2}, k) - f(t, x_{j-1/2}, k))

    by zero, where F is the entropy flux built from the numerical flux with
    arguments clipped at k from above/below, evaluated with the convolution
    of the *previous* state.  Returns the max over interior cells and k; a
    valid step stays below rounding noise.
    """
    if nxt.n != prev.n + 1:
        raise ValueError(f"states are not consecutive: n={prev.n} -> n={nxt.n}")
    gw, n = grid.ghost_width, grid.n_cells
    lam = grid.lam
    t = prev.t
    rho = prev.rho
    left = rho[gw - 1:gw + n]      # cell left of each of the n+1 interfaces
    right = rho[gw:gw + n + 1]
    x_if = grid.interfaces()
    if local:
        c = 0.5 * (left + right)
    else:
        c = convolve_padded(rho, kernel_table, grid)
    v_c = model.v(c)

    K = np.asarray(k_values, dtype=float)[:, None]
    xx, kk = np.broadcast_arrays(x_if[None, :], K)
    f_k = model.f(t, xx, kk)

    def flux(rl, rr):
        return (0.5 * (model.f(t, x_if, rl) + model.f(t, x_if, rr)) * v_c
                - (rr - rl) / (6.0 * lam))

    F = (flux(np.maximum(left, K), np.maximum(right, K))
         - flux(np.minimum(left, K), np.minimum(right, K)))

    rho_prev = rho[gw:gw + n]
    rho_next = nxt.rho[gw:gw + n]
    residual = (np.abs(rho_next - K) - np.abs(rho_prev - K)
                + lam * (F[:, 1:] - F[:, :-1])
                + lam * np.sign(rho_next - K) * (f_k[:, 1:] - f_k[:, :-1]))
    return float(np.max(residual))


# ---------------------------------------------------------------------------
# per-run series and always-on invariant monitor
# ---------------------------------------------------------------------------

SERIES_COLUMNS = ("t", "l1", "linf", "tv", "entropy_residual",
                  "bound_linf", "bound_tv")


@dataclass
class DiagnosticsSeries:
    """Per-recorded-step scalars, in column order SERIES_COLUMNS."""

    t: list = field(default_factory=list)
    l1: list = field(default_factory=list)
    linf: list = field(default_factory=list)
    tv: list = field(default_factory=list)
    entropy_residual: list = field(default_factory=list)
    bound_linf: list = field(default_factory=list)
    bound_tv: list = field(default_factory=list)

    def add_row(self, t, l1, linf, tv, max_entropy_residual,
                bound_linf, bound_tv) -> None:
        self.t.append(t)
        self.l1.append(l1)
        self.linf.append(linf)
        self.tv.append(tv)
        self.entropy_residual.append(max_entropy_residual)
        self.bound_linf.append(bound_linf)
        self.bound_tv.append(bound_tv)

    def __len__(self) -> int:
        return len(self.t)

    def rows(self):
        cols = [getattr(self, name) for name in SERIES_COLUMNS]
        return list(zip(*cols))


@dataclass
class MonitorReport:
    steps_observed: int
    min_value: float
    max_value: float
    positivity_expected: bool
    l1_conservation_expected: bool
    l1_initial: float
    max_l1_drift_rel: float
    max_linf_excess: float
    max_tv_excess: float
    upper_flat_levels: tuple
    lower_flat_levels: tuple
    max_upper_overshoot: float
    max_lower_undershoot: float
    max_conv_diff_excess: float
    max_conv_second_diff_excess: float
    max_tv: float
    max_linf: float
    violations: tuple

    @property
    def ok(self) -> bool:
        return not self.violations


class InvariantMonitor:
    """Cheap per-step checks of the scheme's proved properties.

    Violations are collected into the report; in strict mode the first one
    raises :class:`InvariantViolationError`.
    """

    def __init__(self, model, grid: Grid, initial_state, constants,
                 strict: bool = False, check_convolution: bool = False,
                 kernel_table=None):
        self.model = model
        self.grid = grid
        self.constants = constants
        self.strict = strict
        self.check_convolution = check_convolution and kernel_table is not None
        self.kernel_table = kernel_table

        interior0 = initial_state.interior(grid)
        self.l1_initial = l1_norm(initial_state, grid)
        self.linf_initial = linf_norm(initial_state)
        self.tv_initial = total_variation(initial_state)
        min0 = float(np.min(interior0))
        max0 = float(np.max(interior0))
        self.positivity_expected = min0 >= -POSITIVITY_TOL

        self.upper_flat_levels = tuple(
            lv for lv in model.flat_levels if max0 <= lv + FLAT_LEVEL_TOL)
        self.lower_flat_levels = tuple(
            lv for lv in model.flat_levels if min0 >= lv - FLAT_LEVEL_TOL)

        flux_free = set(model.flat_levels) | {0.0}
        far = (float(initial_state.rho[0]), float(initial_state.rho[-1]))
        self.l1_conservation_expected = (
            self.positivity_expected
            and all(any(abs(v - lv) <= FLAT_LEVEL_TOL for lv in flux_free) for v in far))

        self.steps = 0
        self.min_value = math.inf
        self.max_value = -math.inf
        self.max_l1_drift_rel = 0.0
        self.max_linf_excess = -math.inf
        self.max_tv_excess = -math.inf
        self.max_upper_overshoot = -math.inf
        self.max_lower_undershoot = -math.inf
        self.max_conv_diff_excess = -math.inf
        self.max_conv_second_diff_excess = -math.inf
        self.max_tv = 0.0
        self.max_linf = 0.0
        self.violations: list[str] = []

    def _violate(self, message: str) -> None:
        self.violations.append(message)
        if self.strict:
            raise InvariantViolationError(message)

    def observe(self, state) -> None:
        grid = self.grid
        interior = state.interior(grid)
        t = state.t
        self.steps += 1

        mn = float(np.min(interior))
        mx = float(np.max(interior))
        self.min_value = min(self.min_value, mn)
        self.max_value = max(self.max_value, mx)
        if self.positivity_expected and mn < -POSITIVITY_TOL:
            self._violate(f"positivity: min {mn:.3e} at t={t:.6g}")

        for lv in self.upper_flat_levels:
            self.max_upper_overshoot = max(self.max_upper_overshoot, mx - lv)
            if mx > lv + FLAT_LEVEL_TOL:
                self._violate(f"flat level {lv}: max {mx:.17g} exceeds it at t={t:.6g}")
        for lv in self.lower_flat_levels:
            self.max_lower_undershoot = max(self.max_lower_undershoot, lv - mn)
            if mn < lv - FLAT_LEVEL_TOL:
                self._violate(f"flat level {lv}: min {mn:.17g} undershoots it at t={t:.6g}")

        l1 = l1_norm(state, grid)
        if self.l1_conservation_expected:
            drift = abs(l1 - self.l1_initial) / max(self.l1_initial, 1e-300)
            self.max_l1_drift_rel = max(self.max_l1_drift_rel, drift)
            if drift > L1_DRIFT_RTOL:
                self._violate(f"L1 drift: relative {drift:.3e} at t={t:.6g}")

        linf = linf_norm(state)
        tv = total_variation(state)
        self.max_linf = max(self.max_linf, linf)
        self.max_tv = max(self.max_tv, tv)
        blinf = linf_bound(self.constants.L, self.linf_initial, t)
        btv = tv_bound(self.constants.K1, self.constants.K2, self.tv_initial, t)
        linf_exc = linf - blinf
        tv_exc = tv - btv
        self.max_linf_excess = max(self.max_linf_excess, linf_exc)
        self.max_tv_excess = max(self.max_tv_excess, tv_exc)
        if linf_exc > BOUND_RSLACK * max(1.0, blinf):
            self._violate(f"sup-norm bound: {linf:.17g} > {blinf:.17g} at t={t:.6g}")
        if tv_exc > BOUND_RSLACK * max(1.0, btv):
            self._violate(f"TV bound: {tv:.17g} > {btv:.17g} at t={t:.6g}")

        if self.check_convolution:
            c = convolve_padded(state.rho, self.kernel_table, grid)
            k = self.model.kernel
            d1 = float(np.max(np.abs(np.diff(c)))) if len(c) > 1 else 0.0
            b1 = grid.h * self.l1_initial * k.norm_deta
            self.max_conv_diff_excess = max(self.max_conv_diff_excess, d1 - b1)
            if d1 > b1 * (1.0 + 1e-9) + 1e-15:
                self._violate(f"convolution smoothing: |Dc| {d1:.3e} > {b1:.3e}")
            if len(c) > 2:
                d2 = float(np.max(np.abs(np.diff(c, n=2))))
                b2 = 2.0 * grid.h ** 2 * self.l1_initial * k.norm_d2eta
                self.max_conv_second_diff_excess = max(
                    self.max_conv_second_diff_excess, d2 - b2)
                if d2 > b2 * (1.0 + 1e-9) + 1e-15:
                    self._violate(f"convolution second difference: {d2:.3e} > {b2:.3e}")

    def report(self) -> MonitorReport:
        return MonitorReport(
            steps_observed=self.steps,
            min_value=self.min_value,
            max_value=self.max_value,
            positivity_expected=self.positivity_expected,
            l1_conservation_expected=self.l1_conservation_expected,
            l1_initial=self.l1_initial,
            max_l1_drift_rel=self.max_l1_drift_rel,
            max_linf_excess=self.max_linf_excess,
            max_tv_excess=self.max_tv_excess,
            upper_flat_levels=self.upper_flat_levels,
            lower_flat_levels=self.lower_flat_levels,
            max_upper_overshoot=self.max_upper_overshoot,
            max_lower_undershoot=self.max_lower_undershoot,
            max_conv_diff_excess=self.max_conv_diff_excess,
            max_conv_second_diff_excess=self.max_conv_second_diff_excess,
            max_tv=self.max_tv,
            max_linf=self.max_linf,
            violations=tuple(self.violations),
        )
