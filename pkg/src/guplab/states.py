"""Special states: squeezed Gaussians, deformed-position eigenstates and
minimum-length states, plus closed-form Gaussian uncertainties."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import minimize_scalar

from . import expr as ex
from .deform import DeformationSpec, _bind, momentum_cutoff, momentum_map_on, quadratic
from .grid import NATURAL, GridWaveFunction, MomentumGrid, PhysicalUnits, normalize
from .operators import deformed_X

__all__ = [
    "SqueezedParams",
    "MLParams",
    "GridError",
    "squeezed_state",
    "squeezed_grid",
    "ml_state",
    "ml_grid",
    "windowed_ml_state",
    "xi_apply",
    "deformed_eigenstate",
    "eigenstate_grid",
    "gaussian_deformed_dx",
    "gaussian_deformed_mean_x",
    "min_dx_over_gaussians",
    "MinimumResult",
]

SQUEEZED_COVER = 8.0
ML_EDGE_TOL = 1e-10
ML_REACH = 1.05e5


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class SqueezedParams:
    """Gaussian in momentum centred at ``p0`` with phase placing it at ``x0``.

    ``a`` sets the momentum variance, ``dp^2 = 1/(2a)``.
    """

    a: float
    x0: float = 0.0
    p0: float = 0.0

    def __post_init__(self):
        if not (self.a > 0 and math.isfinite(self.a)):
            raise ValueError("squeezing a must be positive and finite")


@dataclass(frozen=True)
class MLParams:
    """Minimum-length state at mean position ``xi`` for ``f = 1 + beta p^2``."""

    xi: float
    beta: float

    def __post_init__(self):
        if not (self.beta > 0 and math.isfinite(self.beta)):
            raise ValueError("beta must be positive")


def squeezed_grid(params: SqueezedParams, n_points: int = 4097, half_width: float = 14.0) -> MomentumGrid:
    """Grid centred on ``p0`` spanning ``half_width / sqrt(a)`` each way."""
    return MomentumGrid.centered(params.p0, half_width / math.sqrt(params.a), n_points)


def squeezed_state(params: SqueezedParams, grid: MomentumGrid, units: PhysicalUnits = NATURAL) -> GridWaveFunction:
    """Normalised squeezed Gaussian sampled on ``grid``.

    Examples
    --------
    >>> from guplab.grid import uncertainty, expectation
    >>> sp = SqueezedParams(a=4.0)
    >>> psi = squeezed_state(sp, squeezed_grid(sp))
    >>> round(uncertainty(psi, lambda s: s.multiply(s.p)), 8)
    0.35355339
    """
    a, x0, p0 = params.a, params.x0, params.p0
    reach = SQUEEZED_COVER / math.sqrt(a)
    if not grid.covers(p0 - reach, p0 + reach):
        raise GridError(f"grid too narrow for squeezing a={a:g}")
    p = grid.points
    amps = (a / math.pi) ** 0.25 * np.exp(-0.5 * a * (p - p0) ** 2 - 1j * p * x0 / units.hbar)
    return GridWaveFunction(grid, amps)


def ml_grid(beta: float, xi: float = 0.0, units: PhysicalUnits = NATURAL, n_points: Optional[int] = None, reach: float = 8.0 * math.pi) -> MomentumGrid:
    """Symmetric grid for minimum-length states.

    The step is chosen so that the conjugate position window
    ``pi hbar / step`` spans ``reach`` minimal lengths plus ``8|xi|``; the
    canonical position profile of these states carries a power-law factor
    that grows with ``xi``, and the operator multiplies any aliasing error by
    ``f``.  The profile at ``xi = 0`` has a cusp, so aliasing decays slowly
    and the default ``reach`` is generous: the step is ``0.125/sqrt(beta)``.

    The states decay only like ``p^-2``, so by default ``n_points`` is the
    smallest ``2^k + 1`` (at least ``2^22 + 1``) whose half-width reaches
    ``|p| sqrt(beta) = 1.05e5``, just past the edge test of :func:`ml_state`.
    """
    rb = math.sqrt(beta)
    length = units.hbar * rb
    step = math.pi * units.hbar / (8.0 * abs(xi) + reach * length)
    if n_points is None:
        cells = 2**22
        while step * cells / 2.0 * rb < ML_REACH:
            cells *= 2
        n_points = cells + 1
    half = step * (n_points - 1) / 2.0
    return MomentumGrid(-half, half, n_points)


def _ml_amplitudes(params: MLParams, p, units):
    rb = math.sqrt(params.beta)
    phase = -params.xi / (units.hbar * rb) * np.arctan(rb * p)
    return math.sqrt(2.0 * rb / math.pi) / (1.0 + params.beta * p * p) * np.exp(1j * phase)


def ml_state(params: MLParams, grid: MomentumGrid, units: PhysicalUnits = NATURAL) -> GridWaveFunction:
    """Minimum-length state for ``f = 1 + beta p^2`` at zero mean momentum.

    Raises :class:`GridError` unless the amplitude at both grid ends is below
    ``1e-10`` of its peak.
    """
    edge = 1.0 / (1.0 + params.beta * min(grid.p_min**2, grid.p_max**2))
    if grid.p_min >= 0 or grid.p_max <= 0 or edge > ML_EDGE_TOL:
        raise GridError(
            f"grid too narrow for minimum-length state: edge amplitude ratio {edge:.2e}"
        )
    return GridWaveFunction(grid, _ml_amplitudes(params, grid.points, units))


def windowed_ml_state(params: MLParams, grid: MomentumGrid, window: float, units: PhysicalUnits = NATURAL) -> GridWaveFunction:
    """Minimum-length profile multiplied by ``exp(-(p/window)^2 / 2)`` and
    renormalised; a Schwartz-class stand-in with the same local shape."""
    p = grid.points
    amps = _ml_amplitudes(params, p, units) * np.exp(-0.5 * (p / window) ** 2)
    return normalize(GridWaveFunction(grid, amps))


def xi_apply(params: MLParams, psi: GridWaveFunction, spec: DeformationSpec = None, units: PhysicalUnits = NATURAL) -> GridWaveFunction:
    """``X psi + i hbar beta p psi``, whose eigenvectors are the minimum-length states."""
    if spec is None:
        spec = quadratic(params.beta)
    x = deformed_X(spec, psi, units)
    return x + psi.multiply(1j * units.hbar * params.beta * psi.p)


def eigenstate_grid(x: float = 0.0, units: PhysicalUnits = NATURAL, n_points: int = 2**20 + 1, reach: float = 40.0) -> MomentumGrid:
    """Symmetric grid whose conjugate position window covers ``|x| + reach``
    (in units of ``hbar`` per unit momentum)."""
    step = math.pi * units.hbar / (abs(x) + reach * units.hbar)
    half = step * (n_points - 1) / 2.0
    return MomentumGrid(-half, half, n_points)


def deformed_eigenstate(spec: DeformationSpec, x: float, grid: MomentumGrid, units: PhysicalUnits = NATURAL) -> GridWaveFunction:
    """Eigenvector of the deformed position operator with eigenvalue ``x``.

    Normalised with the exact full-line integral of ``1/f``, so the grid
    norm falls short of one by the truncated tail.
    """
    upper = momentum_cutoff(spec)
    if not math.isfinite(upper):
        raise ValueError("eigenstate not normalizable for this f")
    lower = _lower_cutoff(spec)
    total = upper + lower
    p = grid.points
    k = momentum_map_on(spec, p)
    amps = np.exp(-1j * x * k / units.hbar) / np.sqrt(spec.f(p) * total)
    return GridWaveFunction(grid, amps)


def _lower_cutoff(spec: DeformationSpec) -> float:
    """``int_{-inf}^0 dp / f`` via the reflected deformation."""
    mirror = _bind(ex.reflect(spec.tree), dict(spec.params), spec.canonical_limit)
    value = momentum_cutoff(mirror)
    if not math.isfinite(value):
        raise ValueError("eigenstate not normalizable for this f")
    return value


def gaussian_deformed_mean_x(params: SqueezedParams, beta: float) -> float:
    """Mean deformed position in a squeezed state for ``f = 1 + beta p^2``."""
    a, x0, p0 = params.a, params.x0, params.p0
    return x0 * (1.0 + beta * p0 * p0 + beta / (2.0 * a))


def gaussian_deformed_dx(params: SqueezedParams, beta: float, units: PhysicalUnits = NATURAL) -> float:
    """Closed-form deformed position uncertainty of a squeezed state,
    valid for ``f = 1 + beta p^2``.

    Examples
    --------
    >>> round(gaussian_deformed_dx(SqueezedParams(a=1.0), 0.1), 6)
    0.747496
    """
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    a, x0, p0 = params.a, params.x0, params.p0
    h2 = units.hbar**2
    bracket = (
        0.5 * h2 * a * (1.0 + beta / a + 1.75 * beta**2 / a**2)
        + h2 * a * beta * p0**2 * (1.0 + 0.5 * beta * p0**2)
        + 2.5 * h2 * beta**2 * p0**2
        + 2.0 * beta**2 / a * x0**2 * p0**2
        + 0.5 * beta**2 / a**2 * x0**2
    )
    return math.sqrt(bracket)


@dataclass(frozen=True)
class MinimumResult:
    a_star: float
    dx_min: float


def min_dx_over_gaussians(beta: float, x0: float = 0.0, p0: float = 0.0, units: PhysicalUnits = NATURAL, rtol: float = 1e-10) -> MinimumResult:
    """Smallest closed-form deformed position uncertainty over squeezings.

    Golden-section search in ``log a`` starting from the bracket
    ``[beta/100, 100 beta]``, widened geometrically until it encloses a
    minimum.

    Examples
    --------
    >>> r = min_dx_over_gaussians(0.01)
    >>> round(r.a_star / 0.01, 4), round(r.dx_min / 0.1, 4)
    (1.3229, 1.3501)
    """
    if not beta > 0:
        raise ValueError("beta must be positive")

    def objective(log_a):
        return gaussian_deformed_dx(SqueezedParams(math.exp(log_a), x0, p0), beta, units)

    lo, hi = math.log(beta / 100.0), math.log(100.0 * beta)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        f_lo, f_mid, f_hi = objective(lo), objective(mid), objective(hi)
        if f_mid < f_lo and f_mid < f_hi:
            break
        width = hi - lo
        if f_lo <= f_mid:
            lo -= width
        if f_hi <= f_mid:
            hi += width
    else:
        raise RuntimeError("could not bracket the minimum")
    res = minimize_scalar(objective, bracket=(lo, mid, hi), method="golden", tol=rtol)
    a_star = math.exp(res.x)
    return MinimumResult(a_star=a_star, dx_min=float(res.fun))
