"""Wigner functions of momentum-space states and Weyl symbols of the
deformed position operator.

The transform is the canonical one,

    W(x, p) = (1 / 2 pi hbar) int exp(i x u / hbar) psi(p + u/2) conj(psi(p - u/2)) du,

evaluated by direct trapezoidal quadrature over ``u``.  Samples at half-grid
offsets come from Fourier (band-limited) interpolation.  This convention
puts the peak of a state with phase ``exp(-i p x0 / hbar)`` at ``x = x0``;
its normalisation is fixed by the two marginal identities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .deform import DeformationSpec
from .grid import NATURAL, GridWaveFunction, PhysicalUnits, canonical_moments, position_amplitude

__all__ = [
    "PhaseSpaceField",
    "KernelError",
    "wigner_function",
    "default_x_grid",
    "marginals",
    "phase_space_expectation",
    "weyl_symbol_deformed_X",
    "weyl_symbol_deformed_X2",
    "write_wigner_csv",
    "write_wigner_matrix",
]

IMAG_TOL = 1e-6


class KernelError(RuntimeError):
    pass


def _trapezoid_weights(points: np.ndarray) -> np.ndarray:
    if points.size == 1:
        return np.ones(1)
    d = np.diff(points)
    w = np.zeros(points.size)
    w[:-1] += 0.5 * d
    w[1:] += 0.5 * d
    return w


@dataclass(frozen=True, eq=False)
class PhaseSpaceField:
    """Real samples ``values[i, j] = W(x[i], p[j])`` with trapezoid cell weights."""

    x: np.ndarray
    p: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        for name in ("x", "p", "values"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        if self.values.shape != (self.x.size, self.p.size):
            raise ValueError("values must have shape (len(x), len(p))")

    @property
    def x_weights(self) -> np.ndarray:
        return _trapezoid_weights(self.x)

    @property
    def p_weights(self) -> np.ndarray:
        return _trapezoid_weights(self.p)

    @property
    def cell_areas(self) -> np.ndarray:
        return np.outer(self.x_weights, self.p_weights)

    def total(self) -> float:
        return float(np.sum(self.cell_areas * self.values))


def _half_shift(values: np.ndarray) -> np.ndarray:
    """Band-limited interpolation at the midpoints between samples."""
    n = values.size
    m = n - 1
    slope = (values[-1] - values[0]) / m
    core = values[:m] - (values[0] + slope * np.arange(m))
    k = np.fft.fftfreq(m) * 2.0 * np.pi
    shift = np.exp(0.5j * k)
    if m % 2 == 0:
        # the Nyquist mode has no unique half-step continuation; use its real part
        shift[m // 2] = math.cos(0.5 * k[m // 2])
    mid = np.fft.ifft(np.fft.fft(core) * shift)
    return mid + values[0] + slope * (np.arange(m) + 0.5)


def default_x_grid(psi: GridWaveFunction, units: PhysicalUnits = NATURAL, n: int = 129, widths: float = 8.0) -> np.ndarray:
    """``n`` points spanning ``widths`` canonical position widths about ``<x>``."""
    mean, spread = canonical_moments(psi, units)
    if spread <= 0:
        raise ValueError("state has no position spread")
    return mean + widths * spread * np.linspace(-1.0, 1.0, n)


def wigner_function(
    psi: GridWaveFunction,
    x_grid=None,
    units: PhysicalUnits = NATURAL,
    rows: int = 401,
    support_tol: float = 1e-15,
    reach: float = 30.0,
) -> PhaseSpaceField:
    """Wigner function on ``x_grid`` times a momentum sub-grid of ``psi``.

    Parameters
    ----------
    psi : GridWaveFunction
        normalised state.
    x_grid : array_like, optional
        positions; defaults to :func:`default_x_grid`.
    rows : int
        approximate number of momentum rows spanning the support of ``psi``.
    support_tol : float
        amplitudes below ``support_tol * max|psi|`` are treated as zero.
    reach : float
        canonical position widths (beyond ``|<x>|``) assumed to hold the
        state; sets the largest admissible ``u`` step.

    Raises
    ------
    KernelError
        if the imaginary part of the result exceeds ``1e-6``.
    """
    hbar = units.hbar
    grid = psi.grid
    h = grid.step
    if x_grid is None:
        x_grid = default_x_grid(psi, units)
    x = np.atleast_1d(np.asarray(x_grid, dtype=float))
    if x.size == 0:
        raise ValueError("x_grid must not be empty")

    amps = psi.amplitudes
    mag = np.abs(amps)
    inside = np.nonzero(mag > support_tol * mag.max())[0]
    lo, hi = int(inside[0]), int(inside[-1])

    # samples on the half-step grid: fine[2j] = psi(p_j), fine[2j+1] = psi(p_j + h/2)
    fine = np.zeros(2 * grid.n_points - 1, dtype=complex)
    fine[0::2] = amps
    fine[1::2] = _half_shift(amps)
    fine[: 2 * lo] = 0.0
    fine[2 * hi + 1 :] = 0.0

    # u step: multiple of h small enough that periodic images in x miss x_grid
    mean, spread = canonical_moments(psi, units)
    extent = abs(mean) + reach * spread
    du_max = 2.0 * math.pi * hbar / (np.max(np.abs(x)) + extent)
    s_u = max(1, int(du_max // h))
    du = s_u * h

    stride = max(1, (hi - lo) // max(rows - 1, 1))
    row_idx = np.arange(lo, hi + 1, stride)
    if row_idx[-1] != hi:
        row_idx = np.append(row_idx, hi)
    centre = 2 * row_idx

    kmax = (2 * (hi - lo)) // s_u + 1
    pad = kmax * s_u
    padded = np.concatenate([np.zeros(pad, complex), fine, np.zeros(pad, complex)])
    ks = np.arange(-kmax, kmax + 1)
    phase = np.exp(1j * np.outer(ks * du, x) / hbar)

    values = np.empty((x.size, row_idx.size))
    worst_imag = 0.0
    chunk = max(1, 4_000_000 // ks.size)
    for start in range(0, row_idx.size, chunk):
        c = centre[start : start + chunk] + pad
        plus = padded[c[:, None] + ks[None, :] * s_u]
        minus = padded[c[:, None] - ks[None, :] * s_u]
        block = (plus * np.conj(minus)) @ phase
        block *= du / (2.0 * math.pi * hbar)
        worst_imag = max(worst_imag, float(np.max(np.abs(block.imag))))
        values[:, start : start + chunk] = block.real.T
    if worst_imag > IMAG_TOL:
        raise KernelError(
            f"asymmetric kernel (bug or grid too coarse): imaginary part {worst_imag:.2e}"
        )
    return PhaseSpaceField(x=x, p=grid.points[row_idx], values=values)


def marginals(W: PhaseSpaceField):
    """``(momentum density on W.p, position density on W.x)``."""
    momentum = W.x_weights @ W.values
    position = W.values @ W.p_weights
    return momentum, position


def phase_space_expectation(W: PhaseSpaceField, symbol) -> float:
    """Integral of ``symbol(x, p) * W`` over the sampled phase space."""
    X, P = np.meshgrid(W.x, W.p, indexing="ij")
    s = np.broadcast_to(np.asarray(symbol(X, P), dtype=float), X.shape)
    return float(np.sum(W.cell_areas * s * W.values))


def weyl_symbol_deformed_X(spec: DeformationSpec, x, p):
    """Weyl symbol ``x f(p)`` of the symmetric deformed position operator."""
    return np.asarray(x) * spec.f(np.asarray(p, dtype=float))


def weyl_symbol_deformed_X2(spec: DeformationSpec, x, p, units: PhysicalUnits = NATURAL):
    """Weyl symbol of its square, ``x^2 f^2 + hbar^2 f'^2 / 4``.

    Examples
    --------
    >>> from guplab.deform import quadratic
    >>> round(float(weyl_symbol_deformed_X2(quadratic(0.1), 0.0, 1.0)), 12)
    0.01
    """
    p = np.asarray(p, dtype=float)
    f = spec.f(p)
    df = spec.df(p)
    return np.asarray(x) ** 2 * f**2 + 0.25 * units.hbar**2 * df**2


def write_wigner_csv(W: PhaseSpaceField, path) -> None:
    """Rows ``x,p,W`` in row-major (x outer) order."""
    X, P = np.meshgrid(W.x, W.p, indexing="ij")
    table = np.column_stack([X.ravel(), P.ravel(), W.values.ravel()])
    np.savetxt(path, table, delimiter=",", header="x,p,W", comments="", fmt="%.17g")


def write_wigner_matrix(W: PhaseSpaceField, path) -> None:
    """Gnuplot ``nonuniform matrix`` layout: first row holds the momenta,
    first column the positions."""
    out = np.zeros((W.x.size + 1, W.p.size + 1))
    out[0, 0] = W.p.size
    out[0, 1:] = W.p
    out[1:, 0] = W.x
    out[1:, 1:] = W.values
    np.savetxt(path, out, fmt="%.17g")
