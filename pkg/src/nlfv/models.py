"""Flux triples (f, v, kernel) and their norm metadata.

Each model bundles the flux f(t, x, rho), the velocity law v(r) applied to the
convolved density, a polynomial-bump averaging kernel, and the sup-norm bounds
(over a declared invariant state range) that the CFL condition and the growth
constants consume.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .errors import InvalidKernelError, UnknownModelError
from .grid import Grid

# Sample counts for derivative-norm estimation and flat-level spot checks.
_NORM_SAMPLES = 10_000
_QUAD_OPTS = dict(epsabs=1e-16, epsrel=1e-13, limit=500)


@dataclass(frozen=True)
class KernelSpec:
    """Normalized bump kernel alpha*((x-a)(b-x))^{5/2} on [a, b]."""

    a: float
    b: float
    alpha: float
    norm_eta: float     # sup |eta|
    norm_deta: float    # sup |eta'|
    norm_d2eta: float   # sup |eta''|

    @property
    def radius(self) -> float:
        return max(abs(self.a), abs(self.b))

    @property
    def width(self) -> float:
        return self.b - self.a

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        inside = (x > self.a) & (x < self.b)
        out = np.zeros_like(x)
        u = (x[inside] - self.a) * (self.b - x[inside])
        out[inside] = self.alpha * u ** 2.5
        return out


@dataclass(frozen=True)
class KernelTable:
    """Cell-averaged kernel weights for a given grid spacing.

    ``weights[i]`` is the average of the kernel over the h-window centered at
    offset ``(m_min + i) * h``; ``sum(h * weights) == 1`` up to quadrature
    tolerance.
    """

    weights: np.ndarray
    m_min: int
    h: float

    @property
    def m_max(self) -> int:
        return self.m_min + len(self.weights) - 1


@dataclass(frozen=True)
class ModelSpec:
    """A flux triple plus the metadata used by stability and bound formulas."""

    name: str
    f: Callable[[float, np.ndarray, np.ndarray], np.ndarray]
    v: Callable[[np.ndarray], np.ndarray]
    kernel: KernelSpec
    C: float                       # x-dependence constant; 0 for x-independent flux
    norm_dr_f: float               # sup |df/drho| over the invariant range
    norm_v: float                  # sup |v|
    norm_dv: float                 # sup |v'|
    norm_d2v: float                # sup |v''|
    invariant_range: tuple[float, float]
    flat_levels: tuple[float, ...]
    norm_dxr_f: float = 0.0        # sup |d2f/dx drho|; zero for all builtins


def _bump_integral(a: float, b: float, lo: float, hi: float) -> float:
    """Integral of ((x-a)(b-x))^{5/2} over [lo, hi] within the support."""
    val, _ = integrate.quad(lambda x: ((x - a) * (b - x)) ** 2.5, lo, hi, **_QUAD_OPTS)
    return val


def normalize_kernel(a: float, b: float) -> KernelSpec:
    """Normalize the bump on [a, b] so its integral is one.

    The coefficient is computed by adaptive quadrature; the derivative sup
    norms by dense sampling of the analytic derivatives.
    """
    if b <= a:
        raise InvalidKernelError(f"kernel support [{a}, {b}] is empty")
    alpha = 1.0 / _bump_integral(a, b, a, b)

    x = np.linspace(a, b, _NORM_SAMPLES + 1)
    u = (x - a) * (b - x)
    eta = alpha * u ** 2.5
    deta = alpha * 2.5 * u ** 1.5 * (a + b - 2.0 * x)
    d2eta = alpha * 2.5 * np.sqrt(u) * (1.5 * (a + b - 2.0 * x) ** 2 - 2.0 * u)
    return KernelSpec(
        a=float(a), b=float(b), alpha=alpha,
        norm_eta=float(np.max(eta)),
        norm_deta=float(np.max(np.abs(deta))),
        norm_d2eta=float(np.max(np.abs(d2eta))),
    )


def kernel_cell_averages(kernel: KernelSpec, grid: Grid) -> KernelTable:
    """Average the kernel over h-windows centered at integer offsets m*h.

    Windows outside the support get exactly zero weight and are trimmed from
    the table.  Orientation: weight index m pairs with density sampled at
    offset -m*h, so c approximates the convolution x -> integral of
    rho(xi) * eta(x - xi).
    """
    h = grid.h
    a, b = kernel.a, kernel.b
    # windows [(m-1/2)h, (m+1/2)h] overlapping (a, b)
    m_lo = math.floor(a / h + 0.5)
    m_hi = math.ceil(b / h - 0.5)
    weights = np.zeros(m_hi - m_lo + 1)
    for i, m in enumerate(range(m_lo, m_hi + 1)):
        lo = max((m - 0.5) * h, a)
        hi = min((m + 0.5) * h, b)
        if hi > lo:
            weights[i] = kernel.alpha * _bump_integral(a, b, lo, hi) / h
    nz = np.nonzero(weights)[0]
    if len(nz) == 0:
        raise InvalidKernelError("kernel support does not overlap any window")
    weights = weights[nz[0]:nz[-1] + 1]
    return KernelTable(weights=weights, m_min=m_lo + int(nz[0]), h=h)


def _traffic_model(name: str, a: float, b: float, v_max: float) -> ModelSpec:
    kernel = normalize_kernel(a, b)
    return ModelSpec(
        name=name,
        f=lambda t, x, rho: rho * (1.0 - rho),
        v=lambda r: v_max * (1.0 - r),
        kernel=kernel,
        C=0.0,
        norm_dr_f=1.0,            # sup |1 - 2 rho| on [0, 1]
        norm_v=v_max,
        norm_dv=v_max,
        norm_d2v=0.0,
        invariant_range=(0.0, 1.0),
        flat_levels=(0.0, 1.0),
    )


def _tv_example_model(a: float, b: float) -> ModelSpec:
    # Solutions overshoot 1 (that is the point of the example), so norms are
    # taken over [0, 2]; |v| = |1 - r| <= 1 there.
    kernel = normalize_kernel(a, b)
    return ModelSpec(
        name="tv_example",
        f=lambda t, x, rho: 1.0 * rho,
        v=lambda r: 1.0 - r,
        kernel=kernel,
        C=0.0,
        norm_dr_f=1.0,
        norm_v=1.0,
        norm_dv=1.0,
        norm_d2v=0.0,
        invariant_range=(0.0, 2.0),
        flat_levels=(0.0,),
    )


def _limit_family_velocity(r) -> np.ndarray:
    # (1-r)^3 cut off at r >= 1; constant 1 on r < 0 so v stays bounded there.
    r = np.asarray(r, dtype=float)
    rc = np.clip(r, 0.0, 1.0)
    return (1.0 - rc) ** 3


def _limit_family_model(a: float) -> ModelSpec:
    if a <= 0.0:
        raise InvalidKernelError(f"kernel half-width must be positive, got {a}")
    kernel = normalize_kernel(-a, a)
    return ModelSpec(
        name="limit_family",
        f=lambda t, x, rho: 1.0 * rho,
        v=_limit_family_velocity,
        kernel=kernel,
        C=0.0,
        norm_dr_f=1.0,
        norm_v=1.0,               # sup of (1-r)^3 on [0, 1]
        norm_dv=3.0,              # sup of 3(1-r)^2
        norm_d2v=6.0,
        invariant_range=(0.0, 1.0),
        flat_levels=(0.0,),
    )


_DEFAULT_HORIZONS = {"traffic_forward": (-0.25, 0.0), "traffic_backward": (0.0, 0.25)}


def builtin_model(name: str, **params) -> ModelSpec:
    """Construct a named builtin model.

    Parameters by model:
      traffic_forward / traffic_backward: v_max (default 1.0); kernel_a,
        kernel_b override the default horizon.
      tv_example: kernel_a, kernel_b (required).
      limit_family: width (kernel half-width a, required).
    """
    if name in _DEFAULT_HORIZONS:
        da, db = _DEFAULT_HORIZONS[name]
        return _traffic_model(
            name,
            a=params.get("kernel_a", da),
            b=params.get("kernel_b", db),
            v_max=params.get("v_max", 1.0),
        )
    if name == "tv_example":
        try:
            return _tv_example_model(params["kernel_a"], params["kernel_b"])
        except KeyError as exc:
            raise UnknownModelError("tv_example requires kernel_a and kernel_b") from exc
    if name == "limit_family":
        try:
            return _limit_family_model(params["width"])
        except KeyError as exc:
            raise UnknownModelError("limit_family requires width") from exc
    raise UnknownModelError(
        f"unknown model {name!r}; known: traffic_forward, traffic_backward, "
        "tv_example, limit_family")


def sampled_derivative_bounds(model: ModelSpec, step: float = 1e-5,
                              samples: int = 2001) -> dict[str, float]:
    """Finite-difference suprema of |df/drho|, |v'|, |v''| over the invariant range.

    Used by tests to confirm the stored norms dominate the sampled ones.
    """
    lo, hi = model.invariant_range
    rho = np.linspace(lo + step, hi - step, samples)
    df = (model.f(0.0, 0.0, rho + step) - model.f(0.0, 0.0, rho - step)) / (2 * step)
    dv = (model.v(rho + step) - model.v(rho - step)) / (2 * step)
    d2v = (model.v(rho + step) - 2 * model.v(rho) + model.v(rho - step)) / step**2
    return {
        "dr_f": float(np.max(np.abs(df))),
        "dv": float(np.max(np.abs(dv))),
        "d2v": float(np.max(np.abs(d2v))),
    }


def flat_level_defect(model: ModelSpec, t_values: Sequence[float] = (0.0, 0.5, 1.0),
                      x_values: Sequence[float] = (-1.0, 0.0, 1.0)) -> float:
    """Max |f(t, x, rho_bar)| over a (t, x) lattice and all declared flat levels."""
    worst = 0.0
    for level in model.flat_levels:
        for t in t_values:
            vals = np.abs(model.f(t, np.asarray(x_values, dtype=float),
                                  np.full(len(x_values), level)))
            worst = max(worst, float(np.max(vals)))
    return worst
