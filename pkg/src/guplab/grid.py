"""Discretized momentum-space Hilbert space.

Wavefunctions live on a uniform momentum grid.  Integrals use the
trapezoidal rule and derivatives are spectral (FFT based).  All objects are
immutable; every function returns new arrays.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "PhysicalUnits",
    "NATURAL",
    "MomentumGrid",
    "GridWaveFunction",
    "GridMismatchError",
    "inner_product",
    "norm",
    "normalize",
    "differentiate",
    "expectation",
    "uncertainty",
    "canonical_moments",
    "position_amplitude",
    "passes_schwartz_heuristic",
    "write_wavefunction_csv",
    "read_wavefunction_csv",
]

BOUNDARY_TOL = 1e-12


class GridMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class PhysicalUnits:
    """Action, mass and frequency scales (natural units by default)."""

    hbar: float = 1.0
    mass: float = 1.0
    omega: float = 1.0

    def __post_init__(self):
        for name in ("hbar", "mass", "omega"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be a positive finite number, got {value!r}")

    @property
    def L0(self) -> float:
        """Oscillator length sqrt(hbar / 2 m omega)."""
        return math.sqrt(self.hbar / (2.0 * self.mass * self.omega))

    @property
    def K0(self) -> float:
        """Oscillator momentum sqrt(hbar m omega / 2)."""
        return math.sqrt(self.hbar * self.mass * self.omega / 2.0)


NATURAL = PhysicalUnits()


def _frozen(array: np.ndarray) -> np.ndarray:
    array.flags.writeable = False
    return array


@dataclass(frozen=True, eq=False)
class MomentumGrid:
    """Uniform grid ``p_min, p_min + step, ..., p_max`` with trapezoidal weights."""

    p_min: float
    p_max: float
    n_points: int
    points: np.ndarray = field(init=False, repr=False)
    weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not (math.isfinite(self.p_min) and math.isfinite(self.p_max)):
            raise ValueError("grid bounds must be finite")
        if not self.p_min < self.p_max:
            raise ValueError("p_min must be smaller than p_max")
        if int(self.n_points) != self.n_points or self.n_points < 16:
            raise ValueError("n_points must be an integer >= 16")
        object.__setattr__(self, "n_points", int(self.n_points))
        points = self.p_min + self.step * np.arange(self.n_points, dtype=float)
        points[-1] = self.p_max
        weights = np.full(self.n_points, self.step)
        weights[0] = weights[-1] = 0.5 * self.step
        object.__setattr__(self, "points", _frozen(points))
        object.__setattr__(self, "weights", _frozen(weights))

    @property
    def step(self) -> float:
        return (self.p_max - self.p_min) / (self.n_points - 1)

    @property
    def length(self) -> float:
        return self.p_max - self.p_min

    def __eq__(self, other):
        if not isinstance(other, MomentumGrid):
            return NotImplemented
        return (self.p_min, self.p_max, self.n_points) == (other.p_min, other.p_max, other.n_points)

    def __hash__(self):
        return hash((self.p_min, self.p_max, self.n_points))

    @classmethod
    def default(cls, units: PhysicalUnits = NATURAL) -> "MomentumGrid":
        """p in [-40, 40] * sqrt(2) K0 with 2048 points."""
        half = 40.0 * math.sqrt(2.0) * units.K0
        return cls(-half, half, 2048)

    @classmethod
    def centered(cls, center: float, half_width: float, n_points: int) -> "MomentumGrid":
        return cls(center - half_width, center + half_width, n_points)

    def covers(self, lo: float, hi: float) -> bool:
        return self.p_min <= lo and hi <= self.p_max

    def wavefunction(self, amplitudes) -> "GridWaveFunction":
        return GridWaveFunction(self, amplitudes)

    def sample(self, func: Callable[[np.ndarray], np.ndarray]) -> "GridWaveFunction":
        """Evaluate ``func`` on the grid points."""
        return GridWaveFunction(self, func(self.points))


@dataclass(frozen=True, eq=False)
class GridWaveFunction:
    """Complex amplitudes psi(p_j) on a :class:`MomentumGrid`.

    ``boundary_warning`` is set by :func:`differentiate` when the input did
    not decay at the grid ends; it is informational only.
    """

    grid: MomentumGrid
    amplitudes: np.ndarray
    boundary_warning: bool = False

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex)
        if amps.shape != (self.grid.n_points,):
            raise ValueError(
                f"expected {self.grid.n_points} amplitudes, got shape {amps.shape}"
            )
        object.__setattr__(self, "amplitudes", _frozen(amps))

    @property
    def p(self) -> np.ndarray:
        return self.grid.points

    def _check(self, other: "GridWaveFunction"):
        if self.grid != other.grid:
            raise GridMismatchError("incompatible grids")

    def __add__(self, other):
        if not isinstance(other, GridWaveFunction):
            return NotImplemented
        self._check(other)
        return GridWaveFunction(self.grid, self.amplitudes + other.amplitudes)

    def __sub__(self, other):
        if not isinstance(other, GridWaveFunction):
            return NotImplemented
        self._check(other)
        return GridWaveFunction(self.grid, self.amplitudes - other.amplitudes)

    def __mul__(self, scalar):
        if isinstance(scalar, GridWaveFunction):
            return NotImplemented
        return GridWaveFunction(self.grid, self.amplitudes * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return GridWaveFunction(self.grid, -self.amplitudes)

    def multiply(self, values) -> "GridWaveFunction":
        """Pointwise product with an array or scalar (e.g. a function of p)."""
        return GridWaveFunction(self.grid, self.amplitudes * values)


Operator = Callable[[GridWaveFunction], GridWaveFunction]


def inner_product(phi: GridWaveFunction, psi: GridWaveFunction) -> complex:
    """Trapezoidal approximation of the integral of conj(phi) * psi dp.

    Real and imaginary parts are accumulated separately so that swapping the
    arguments conjugates the result exactly.
    """
    phi._check(psi)
    w = phi.grid.weights
    a, b = phi.amplitudes, psi.amplitudes
    re = np.sum(w * (a.real * b.real + a.imag * b.imag))
    im = np.sum(w * (a.real * b.imag - a.imag * b.real))
    return complex(re, im)


def norm(psi: GridWaveFunction) -> float:
    return math.sqrt(np.sum(psi.grid.weights * (psi.amplitudes.real ** 2 + psi.amplitudes.imag ** 2)))


def normalize(psi: GridWaveFunction) -> GridWaveFunction:
    n = norm(psi)
    if n == 0.0:
        raise ValueError("cannot normalize the zero vector")
    return GridWaveFunction(psi.grid, psi.amplitudes / n)


def _decays(values: np.ndarray, tol: float) -> bool:
    return abs(values[0]) <= tol and abs(values[-1]) <= tol


def _spectral(values: np.ndarray, step: float, order: int) -> np.ndarray:
    # The linear interpolant of the end values is removed first so that the
    # periodic extension (period = p_max - p_min) is continuous.
    n = values.size
    m = n - 1
    period = m * step
    slope = (values[-1] - values[0]) / period
    core = values[:m] - (values[0] + slope * step * np.arange(m))
    k = 2.0 * np.pi * np.fft.fftfreq(m, d=step)
    factor = (1j * k) ** order
    if m % 2 == 0 and order % 2 == 1:
        factor[m // 2] = 0.0
    d = np.fft.ifft(np.fft.fft(core) * factor)
    out = np.empty(n, dtype=complex)
    out[:m] = d
    out[m] = d[0]
    if order == 1:
        out += slope
    return out


def differentiate(psi: GridWaveFunction, order: int = 1, boundary_tol: float = BOUNDARY_TOL) -> GridWaveFunction:
    """Spectral derivative of order 1 or 2.

    Parameters
    ----------
    psi : GridWaveFunction
        function to differentiate; should decay below ``boundary_tol`` at
        both ends of the grid.
    order : int
        1 or 2.
    boundary_tol : float
        decay threshold; when violated the result carries
        ``boundary_warning=True``.

    Returns
    -------
    GridWaveFunction
    """
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    out = _spectral(psi.amplitudes, psi.grid.step, order)
    warn = psi.boundary_warning or not _decays(psi.amplitudes, boundary_tol)
    return GridWaveFunction(psi.grid, out, boundary_warning=warn)


def expectation(psi: GridWaveFunction, apply: Operator) -> complex:
    """<psi | A psi>."""
    return inner_product(psi, apply(psi))


def uncertainty(psi: GridWaveFunction, apply: Operator, square: str = "twice") -> float:
    """Standard deviation sqrt(<A^2> - <A>^2).

    ``square="twice"`` evaluates <A^2> as <psi|A(A psi)>; ``square="norm"``
    uses ||A psi||^2, which equals it for symmetric A and avoids a second
    differentiation on states that only decay slowly.

    Raises ``ValueError`` if <A> has a significant imaginary part or the
    variance comes out negative beyond round-off.
    """
    a_psi = apply(psi)
    mean = inner_product(psi, a_psi)
    if abs(mean.imag) > 1e-8 * abs(mean) + 1e-10:
        raise ValueError(
            f"non-symmetric operator or numerical breakdown: Im<A> = {mean.imag:.3e}"
        )
    if square == "twice":
        second = inner_product(psi, apply(a_psi)).real
    elif square == "norm":
        second = norm(a_psi) ** 2
    else:
        raise ValueError("square must be 'twice' or 'norm'")
    var = second - mean.real ** 2
    if var < -1e-10:
        raise ValueError(
            f"non-symmetric operator or numerical breakdown: variance {var:.3e}"
        )
    return math.sqrt(max(var, 0.0))


def canonical_moments(psi: GridWaveFunction, units: PhysicalUnits = NATURAL):
    """Mean and standard deviation of the canonical position ``i hbar d/dp``."""
    d = _spectral(psi.amplitudes, psi.grid.step, 1)
    x_psi = GridWaveFunction(psi.grid, 1j * units.hbar * d)
    mean = inner_product(psi, x_psi).real
    second = norm(x_psi) ** 2
    return mean, math.sqrt(max(second - mean * mean, 0.0))


def position_amplitude(psi: GridWaveFunction, x_grid: Sequence[float], units: PhysicalUnits = NATURAL) -> np.ndarray:
    """Canonical position amplitude (2 pi hbar)^(-1/2) * int exp(i p x / hbar) psi(p) dp."""
    x = np.atleast_1d(np.asarray(x_grid, dtype=float))
    if x.size == 0:
        raise ValueError("x_grid must not be empty")
    hbar = units.hbar
    weighted = psi.grid.weights * psi.amplitudes
    p = psi.grid.points
    out = np.empty(x.size, dtype=complex)
    chunk = max(1, 2_000_000 // p.size)
    for start in range(0, x.size, chunk):
        xs = x[start:start + chunk]
        out[start:start + chunk] = np.exp(1j * np.outer(xs, p) / hbar) @ weighted
    return out / math.sqrt(2.0 * math.pi * hbar)


def passes_schwartz_heuristic(psi: GridWaveFunction, tol: float = 1e-10, fraction: float = 0.05) -> bool:
    """|psi| and its first two derivatives stay below ``tol`` on the outer
    ``fraction`` of the grid at each end.

    Each array is measured relative to its own peak, so the test does not
    depend on units and ignores the round-off floor of spectral derivatives
    on fine grids.
    """
    n_edge = max(1, int(round(fraction * psi.grid.n_points)))
    arrays = [
        psi.amplitudes,
        _spectral(psi.amplitudes, psi.grid.step, 1),
        _spectral(psi.amplitudes, psi.grid.step, 2),
    ]
    for arr in arrays:
        edge = np.concatenate([arr[:n_edge], arr[-n_edge:]])
        if np.max(np.abs(edge)) > tol * np.max(np.abs(arr)):
            return False
    return True


def write_wavefunction_csv(psi: GridWaveFunction, path) -> None:
    """Dump ``p,re,im`` rows with 17 significant digits."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["p", "re", "im"])
        for p, a in zip(psi.grid.points, psi.amplitudes):
            writer.writerow([f"{p:.17g}", f"{a.real:.17g}", f"{a.imag:.17g}"])


def read_wavefunction_csv(path) -> GridWaveFunction:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if [h.strip() for h in header] != ["p", "re", "im"]:
            raise ValueError(f"unexpected header {header!r}")
        rows = [(float(p), float(re), float(im)) for p, re, im in reader]
    data = np.array(rows)
    grid = MomentumGrid(data[0, 0], data[-1, 0], len(rows))
    if not np.allclose(grid.points, data[:, 0], rtol=0, atol=1e-12 * max(1.0, grid.length)):
        raise ValueError("momentum column is not a uniform grid")
    return GridWaveFunction(grid, data[:, 1] + 1j * data[:, 2])

