"""Deformed harmonic oscillator in a truncated Fock basis and on the grid.

Ladder convention: ``x = L0 (b^dag + b)``, ``p = i K0 (b^dag - b)``, so the
momentum-space number states carry a phase, ``<p|n> = (-i)^n h_n(p)`` with
``h_n`` the real normalised Hermite functions of :func:`hermite_functions`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy import linalg

from . import expr as ex
from .deform import DeformationSpec, quadratic
from .grid import NATURAL, GridWaveFunction, MomentumGrid, PhysicalUnits, differentiate

__all__ = [
    "FockOperator",
    "FockVector",
    "OscillatorSpec",
    "build_ladder",
    "position_matrix",
    "momentum_matrix",
    "build_H0",
    "build_H_gup",
    "delta_E_perturbative",
    "apply_V_momentum",
    "apply_H0",
    "hermite_functions",
    "hermite_eigenstate",
    "oscillator_grid",
    "spectrum",
    "converged_spectrum",
    "delta_psi",
    "project_to_fock",
    "GUARD_BAND",
]

GUARD_BAND = 10
PAD = 16


@dataclass(frozen=True, eq=False)
class FockOperator:
    """Dense square matrix in the number basis ``|0>, ..., |dim-1>``."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 2:
            raise ValueError("FockOperator needs a square matrix with dim >= 2")
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def dag(self) -> "FockOperator":
        return FockOperator(self.matrix.conj().T)

    def hermiticity_residual(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        return self.hermiticity_residual() <= tol

    def __matmul__(self, other):
        if isinstance(other, FockOperator):
            return FockOperator(self.matrix @ other.matrix)
        if isinstance(other, FockVector):
            return FockVector(self.matrix @ other.coeffs)
        return NotImplemented

    def __add__(self, other):
        return FockOperator(self.matrix + other.matrix)

    def __sub__(self, other):
        return FockOperator(self.matrix - other.matrix)

    def __mul__(self, scalar):
        return FockOperator(self.matrix * scalar)

    __rmul__ = __mul__

    def crop(self, dim: int) -> "FockOperator":
        return FockOperator(self.matrix[:dim, :dim])


@dataclass(frozen=True, eq=False)
class FockVector:
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    @property
    def dim(self) -> int:
        return self.coeffs.size

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    @classmethod
    def basis(cls, n: int, dim: int) -> "FockVector":
        c = np.zeros(dim, dtype=complex)
        c[n] = 1.0
        return cls(c)


@dataclass(frozen=True)
class OscillatorSpec:
    """Oscillator with ``H = hbar omega (P^2/4K0^2 + X^2/4L0^2)``.

    ``truncation`` is the highest retained number state, so matrices have
    ``truncation + 1`` rows.  ``deformation`` defaults to ``1 + beta p^2``.
    """

    units: PhysicalUnits = NATURAL
    beta: float = 0.0
    truncation: int = 200
    deformation: Optional[DeformationSpec] = field(default=None, compare=False)

    def __post_init__(self):
        if self.beta < 0 or not math.isfinite(self.beta):
            raise ValueError("beta must be nonnegative")
        if self.truncation < 1:
            raise ValueError("truncation must be at least 1")
        if self.deformation is None:
            object.__setattr__(self, "deformation", quadratic(self.beta))

    @property
    def dim(self) -> int:
        return self.truncation + 1

    @property
    def perturbative(self) -> bool:
        """Advisory: ``beta K0^2 (2N+1) < 0.5``."""
        return self.beta * self.units.K0**2 * (2 * self.truncation + 1) < 0.5


def build_ladder(dim: int):
    """Annihilation and creation matrices truncated to ``dim`` states.

    Examples
    --------
    >>> b, bd = build_ladder(4)
    >>> np.round((b @ bd - bd @ b).matrix.diagonal().real, 12)
    array([ 1.,  1.,  1., -3.])
    """
    if dim < 2:
        raise ValueError("dim must be at least 2")
    b = np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1)
    return FockOperator(b), FockOperator(b.T)


def position_matrix(units: PhysicalUnits, dim: int) -> FockOperator:
    b, bd = build_ladder(dim)
    return (bd + b) * units.L0


def momentum_matrix(units: PhysicalUnits, dim: int) -> FockOperator:
    b, bd = build_ladder(dim)
    return (bd - b) * (1j * units.K0)


def build_H0(units: PhysicalUnits, dim: int) -> FockOperator:
    """``hbar omega (n + 1/2)`` on the diagonal."""
    return FockOperator(np.diag(units.hbar * units.omega * (np.arange(dim) + 0.5)))


def _sqrt_f_of(p_mat: np.ndarray, spec: DeformationSpec) -> np.ndarray:
    lam, vec = linalg.eigh(p_mat)
    fvals = spec.f(lam)
    if np.any(~np.isfinite(fvals)) or np.any(fvals <= 0):
        raise ValueError("deformation not positive on spectrum")
    return (vec * np.sqrt(fvals)) @ vec.conj().T


def build_H_gup(spec: OscillatorSpec, pad: int = PAD) -> FockOperator:
    """Deformed oscillator Hamiltonian in the number basis.

    ``sqrt(f(p))`` is formed from the eigendecomposition of the truncated
    momentum matrix.  All products are taken in a basis enlarged by ``pad``
    states and then cropped, so that the retained block does not see the
    truncation edge of the factors.
    """
    u = spec.units
    big = spec.dim + pad
    x = position_matrix(u, big).matrix
    p = momentum_matrix(u, big).matrix
    if spec.deformation.is_canonical():
        X = x
    else:
        s = _sqrt_f_of(p, spec.deformation)
        X = s @ x @ s
    H = u.hbar * u.omega * (p @ p / (4 * u.K0**2) + X @ X / (4 * u.L0**2))
    H = 0.5 * (H + H.conj().T)
    return FockOperator(H[: spec.dim, : spec.dim])


def delta_E_perturbative(spec: OscillatorSpec, n: int) -> float:
    """First-order level shift ``(beta m hbar^2 omega^2 / 2)(n^2 + n + 1/2)``.

    Examples
    --------
    >>> delta_E_perturbative(OscillatorSpec(beta=1e-3), 0)
    0.00025
    """
    if n < 0 or n > spec.truncation:
        raise ValueError("level out of range")
    u = spec.units
    return 0.5 * spec.beta * u.mass * u.hbar**2 * u.omega**2 * (n * n + n + 0.5)


def _g_derivatives(deformation: DeformationSpec, p):
    d1 = deformation.derivative
    d2 = ex.derivative(d1)
    g = deformation.g(p)
    g1 = deformation.df(p)
    g2 = np.broadcast_to(np.asarray(ex.evaluate(d2, p, deformation.params), dtype=float), np.shape(p))
    return g, g1, g2


def apply_V_momentum(spec: OscillatorSpec, psi: GridWaveFunction, order: Optional[int] = None) -> GridWaveFunction:
    """Deformation part of the oscillator Hamiltonian as a differential
    operator in momentum space.

    ``V psi = -(hbar^3 omega / 4 L0^2) [g(2+g) psi'' + 2(1+g) g' psi'
    + (g g'' + g'^2/2 + g'')/2 psi]`` with ``g = f - 1``.

    Parameters
    ----------
    order : {None, 1}
        ``None`` keeps every term; ``1`` keeps only the part linear in ``g``.
    """
    u = spec.units
    p = psi.p
    g, g1, g2 = _g_derivatives(spec.deformation, p)
    d1 = differentiate(psi, 1)
    d2 = differentiate(psi, 2)
    a = psi.amplitudes
    if order is None:
        bracket = g * (2 + g) * d2.amplitudes + 2 * (1 + g) * g1 * d1.amplitudes + 0.5 * (g * g2 + 0.5 * g1**2 + g2) * a
    elif order == 1:
        bracket = 2 * g * d2.amplitudes + 2 * g1 * d1.amplitudes + 0.5 * g2 * a
    else:
        raise ValueError("order must be None or 1")
    scale = -(u.hbar**3) * u.omega / (4 * u.L0**2)
    return GridWaveFunction(psi.grid, scale * bracket, d1.boundary_warning or d2.boundary_warning)


def apply_H0(units: PhysicalUnits, psi: GridWaveFunction) -> GridWaveFunction:
    """Undeformed oscillator ``hbar omega (p^2/4K0^2 - hbar^2 d^2/dp^2 / 4L0^2)``."""
    d2 = differentiate(psi, 2)
    amps = units.hbar * units.omega * (
        psi.p**2 / (4 * units.K0**2) * psi.amplitudes - units.hbar**2 / (4 * units.L0**2) * d2.amplitudes
    )
    return GridWaveFunction(psi.grid, amps, d2.boundary_warning)


def hermite_functions(units: PhysicalUnits, n_max: int, p) -> np.ndarray:
    """Real normalised oscillator eigenfunctions in momentum, rows ``0..n_max``.

    Uses the three-term recurrence on normalised Hermite functions, which
    stays finite for large ``n`` where ``H_n`` itself overflows.
    """
    p = np.asarray(p, dtype=float)
    scale = math.sqrt(2.0) * units.K0
    u = p / scale
    out = np.empty((n_max + 1,) + p.shape)
    out[0] = math.pi**-0.25 * np.exp(-0.5 * u * u)
    if n_max >= 1:
        out[1] = math.sqrt(2.0) * u * out[0]
    for n in range(1, n_max):
        out[n + 1] = math.sqrt(2.0 / (n + 1)) * u * out[n] - math.sqrt(n / (n + 1)) * out[n - 1]
    return out / math.sqrt(scale)


def oscillator_grid(units: PhysicalUnits, n_max: int, n_points: int = 2049, margin: float = 8.0) -> MomentumGrid:
    """Symmetric grid covering the first ``n_max + 1`` oscillator states."""
    half = (math.sqrt(2 * n_max + 1) + margin) * math.sqrt(2.0) * units.K0
    return MomentumGrid(-half, half, n_points)


def hermite_eigenstate(units: PhysicalUnits, n: int, grid: MomentumGrid) -> GridWaveFunction:
    """Oscillator eigenfunction ``n`` sampled on ``grid``."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    reach = (math.sqrt(2 * n + 1) + 6.0) * math.sqrt(2.0) * units.K0
    if not grid.covers(-reach, reach):
        raise ValueError(f"grid does not cover oscillator state {n}")
    return GridWaveFunction(grid, hermite_functions(units, n, grid.points)[n])


def spectrum(H: FockOperator, count: Optional[int] = None) -> np.ndarray:
    """Lowest ``count`` eigenvalues, ascending, excluding the guard band."""
    limit = H.dim - GUARD_BAND
    if count is None:
        count = limit
    if count > limit or count < 1:
        raise ValueError(f"count must be between 1 and dim - {GUARD_BAND} = {limit}")
    try:
        values = linalg.eigvalsh(H.matrix, subset_by_index=[0, count - 1])
    except linalg.LinAlgError as exc:
        raise RuntimeError(f"eigensolver failed to converge: {exc}") from exc
    return np.sort(values.real)


def converged_spectrum(spec: OscillatorSpec, count: Optional[int] = None, rtol: float = 1e-8, extra: int = 40) -> np.ndarray:
    """Levels of ``build_H_gup(spec)`` that move by less than ``rtol``
    (relative) when the truncation grows by ``extra``.

    With ``count=None`` the longest stable leading run is returned; an
    explicit ``count`` beyond that run raises ``ValueError``.
    """
    base = spectrum(build_H_gup(spec))
    wider = replace(spec, truncation=spec.truncation + extra)
    ref = spectrum(build_H_gup(wider), base.size)
    stable = np.abs(ref - base) <= rtol * np.abs(base)
    run = base.size if stable.all() else int(np.argmin(stable))
    if count is None:
        count = run
    if count > run:
        raise ValueError(f"only the lowest {run} levels are converged at truncation {spec.truncation}")
    return base[:count]


def delta_psi(spec: OscillatorSpec, n: int) -> FockVector:
    """First-order state correction by sum over unperturbed states."""
    if n < 0 or n >= spec.dim - GUARD_BAND:
        raise ValueError("level outside the retained block")
    H = build_H_gup(spec)
    V = H.matrix - build_H0(spec.units, spec.dim).matrix
    hw = spec.units.hbar * spec.units.omega
    denom = hw * (n - np.arange(spec.dim, dtype=float))
    coeffs = np.zeros(spec.dim, dtype=complex)
    others = np.arange(spec.dim) != n
    coeffs[others] = V[others, n] / denom[others]
    return FockVector(coeffs)


def project_to_fock(psi: GridWaveFunction, units: PhysicalUnits, truncation: int, tail_tol: float = 1e-8) -> FockVector:
    """Number-basis coefficients ``<n|psi>`` for ``n = 0..truncation``.

    Raises ``ValueError`` when more than ``tail_tol`` of the norm lies
    outside the retained states.
    """
    h = hermite_functions(units, truncation, psi.p)
    overlaps = (h * psi.grid.weights) @ psi.amplitudes
    coeffs = (1j) ** np.arange(truncation + 1) * overlaps
    total = float(np.sum(psi.grid.weights * np.abs(psi.amplitudes) ** 2))
    missing = total - float(np.sum(np.abs(coeffs) ** 2))
    if missing > tail_tol:
        raise ValueError(
            f"state not captured by {truncation + 1} number states "
            f"(missing norm {missing:.2e}); increase N or reduce squeezing"
        )
    return FockVector(coeffs)
