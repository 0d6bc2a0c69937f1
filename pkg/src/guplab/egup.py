"""q-deformed ladder algebra and the extended uncertainty relation.

The deformed ladders obey ``a a^dag - q a^dag a = 1`` with
``a|n> = sqrt([n]) |n-1>`` and ``[n] = (q^n - 1)/(q - 1)``.  Position and
momentum are ``X = L (a^dag + a)`` and ``P = i K (a^dag - a)``; on the
interior of a truncated basis they satisfy

    [X, P] = (4 i K L / (1 + q)) (1 + (q - 1)/4 (X^2/L^2 + P^2/K^2)),

which :func:`commutator_fit` checks by least squares.  Products of
operators are always formed in a slightly larger basis and then cropped, so
the retained block is free of truncation-edge artefacts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import linalg

from .grid import NATURAL, GridWaveFunction, PhysicalUnits, differentiate, uncertainty
from .oscillator import GUARD_BAND, FockOperator, FockVector, build_ladder, project_to_fock
from .states import SqueezedParams, squeezed_grid, squeezed_state

__all__ = [
    "QDeformation",
    "q_number",
    "build_q_ladders",
    "build_egup_XP",
    "build_egup_XP_approx",
    "commutator_fit",
    "CommutatorFit",
    "egup_min_uncertainty",
    "MinUncertainty",
    "ConvergenceError",
    "egup_squeezed_uncertainties",
    "SqueezedUncertainties",
    "laurent_fit",
    "egup_oscillator_spectrum",
    "q_oscillator_levels",
    "PAPER_CONSISTENT",
    "OSCILLATOR_MODE",
]

PAPER_CONSISTENT = "paper-consistent"
OSCILLATOR_MODE = "oscillator-mode"
PAD = 8


@dataclass(frozen=True)
class QDeformation:
    """Deformation base ``q >= 1`` with length/momentum scales and truncation.

    ``N`` is the highest retained number state (matrices are ``N+1`` square).
    Use :meth:`paper_consistent` or :meth:`oscillator_mode` to build one
    with the scales tied together.
    """

    q: float
    L: float
    K: float
    N: int = 100
    mode: str = "custom"

    def __post_init__(self):
        if not (math.isfinite(self.q) and self.q >= 1.0):
            raise ValueError("q must be a finite number >= 1")
        if not (self.L > 0 and self.K > 0):
            raise ValueError("L and K must be positive")
        if self.N < 2:
            raise ValueError("N must be at least 2")

    @property
    def epsilon(self) -> float:
        return self.q - 1.0

    @property
    def dim(self) -> int:
        return self.N + 1

    @classmethod
    def paper_consistent(cls, q: float, L: float = 1.0, N: int = 100, hbar: float = 1.0) -> "QDeformation":
        """Scales tied by ``4 K L = hbar (1 + q)``."""
        return cls(q=q, L=L, K=hbar * (1.0 + q) / (4.0 * L), N=N, mode=PAPER_CONSISTENT)

    @classmethod
    def oscillator_mode(cls, q: float, units: PhysicalUnits = NATURAL, N: int = 100) -> "QDeformation":
        """Scales equal to the oscillator length and momentum."""
        return cls(q=q, L=units.L0, K=units.K0, N=N, mode=OSCILLATOR_MODE)

    def with_truncation(self, N: int) -> "QDeformation":
        return QDeformation(self.q, self.L, self.K, N, self.mode)


def q_number(q: float, n):
    """``[n] = (q^n - 1)/(q - 1)``, with the series in ``q - 1`` near ``q = 1``.

    Examples
    --------
    >>> q_number(2.0, 3)
    7.0
    >>> q_number(1.0, 5)
    5.0
    """
    n_arr = np.asarray(n, dtype=float)
    if np.any(n_arr < 0):
        raise ValueError("n must be nonnegative")
    eps = q - 1.0
    if abs(eps) < 1e-8:
        # [n] = n + C(n,2) eps + C(n,3) eps^2 + ...
        out = n_arr + eps * n_arr * (n_arr - 1) / 2.0 + eps**2 * n_arr * (n_arr - 1) * (n_arr - 2) / 6.0
    elif abs(eps) < 0.5:
        # expm1/log1p avoid cancellation in q^n - 1 when n eps is small
        out = np.expm1(n_arr * math.log1p(eps)) / eps
    else:
        out = (q**n_arr - 1.0) / eps
    return float(out) if out.ndim == 0 else out


def _ladder_matrix(q: float, dim: int) -> np.ndarray:
    return np.diag(np.sqrt(q_number(q, np.arange(1, dim))), 1)


def build_q_ladders(d: QDeformation):
    """Deformed annihilation and creation operators on ``N + 1`` states."""
    a = _ladder_matrix(d.q, d.dim)
    return FockOperator(a), FockOperator(a.T)


def _xp(d: QDeformation, dim: int):
    a = _ladder_matrix(d.q, dim)
    ad = a.T
    return d.L * (ad + a), 1j * d.K * (ad - a)


def build_egup_XP(d: QDeformation):
    """``X = L(a^dag + a)``, ``P = iK(a^dag - a)``."""
    X, P = _xp(d, d.dim)
    return FockOperator(X), FockOperator(P)


def _products(d: QDeformation, pad: int = PAD):
    """X, P, X^2, P^2 on the retained block, squares taken in a padded basis."""
    big = d.dim + pad
    X, P = _xp(d, big)
    n = d.dim
    return X[:n, :n], P[:n, :n], (X @ X)[:n, :n], (P @ P)[:n, :n]


@dataclass(frozen=True)
class CommutatorFit:
    """Least-squares fit ``[X,P] = i (c0 + alpha X^2 + beta P^2)`` on the interior."""

    c0: float
    alpha: float
    beta: float
    residual: float
    closed_form: tuple


def commutator_fit(d: QDeformation, interior: int = None) -> CommutatorFit:
    """Fit the commutator on the first ``interior`` rows and columns.

    ``closed_form`` holds ``(c0, alpha, beta)`` from the exact identity; the
    fitted values should reproduce it to round-off.
    """
    X, P, X2, P2 = _products(d, pad=PAD)
    m = interior or d.dim - 2
    C = (X @ P - P @ X)[:m, :m]
    target = (C / 1j).ravel()
    basis = np.column_stack([np.eye(d.dim)[:m, :m].ravel(), X2[:m, :m].ravel(), P2[:m, :m].ravel()])
    coef, *_ = np.linalg.lstsq(basis, target, rcond=None)
    resid = float(np.max(np.abs(basis @ coef - target)))
    pref = 4.0 * d.K * d.L / (1.0 + d.q)
    closed = (pref, pref * d.epsilon / (4.0 * d.L**2), pref * d.epsilon / (4.0 * d.K**2))
    return CommutatorFit(float(coef[0].real), float(coef[1].real), float(coef[2].real), resid, closed)


class ConvergenceError(RuntimeError):
    def __init__(self, message, last):
        super().__init__(message)
        self.last = last


@dataclass(frozen=True)
class MinUncertainty:
    dx_min: float
    dp_min: float
    x_state: FockVector
    p_state: FockVector
    iterations: int


def _min_variance(A_rect: np.ndarray, tol: float, max_iter: int):
    """Minimise ``||(A - <A>) v||^2`` over unit vectors by mean-shift iteration.

    ``A_rect`` has one more row than columns, so ``||A v||^2`` is the
    Galerkin square.  Each step takes the smallest right singular vector of
    ``A - mu``, which stays accurate when ``||A||`` is large.
    """
    rows, dim = A_rect.shape
    embed = np.eye(rows, dim)
    v = np.zeros(dim, dtype=complex)
    v[0] = 1.0
    mu = float(np.vdot(v, A_rect[:dim] @ v).real)
    for it in range(1, max_iter + 1):
        _, sv, vh = linalg.svd(A_rect - mu * embed)
        v = vh[-1].conj()
        new_mu = float(np.vdot(v, A_rect[:dim] @ v).real)
        if abs(new_mu - mu) <= tol * max(1.0, abs(mu)):
            # sv[-1]^2 = ||(A - mu) v||^2 = variance + (mean - mu)^2
            var = float(sv[-1]) ** 2 - (new_mu - mu) ** 2
            return math.sqrt(max(var, 0.0)), FockVector(v), it
        mu = new_mu
    raise ConvergenceError(f"mean-shift iteration did not converge in {max_iter} steps", FockVector(v))


def egup_min_uncertainty(d: QDeformation, tol: float = 1e-10, max_iter: int = 500) -> MinUncertainty:
    """Smallest position and momentum spreads reachable in the truncated basis.

    Squares are Galerkin products (formed with one extra basis state), so the
    truncated ``X`` cannot fake a zero spread with its own eigenvectors.

    Examples
    --------
    >>> r = egup_min_uncertainty(QDeformation.paper_consistent(1.2, N=100))
    >>> abs(r.dx_min / math.sqrt(0.2 / 1.2) - 1) < 0.02
    True
    """
    X, P = _xp(d, d.dim + 1)
    dx, vx, ix = _min_variance(X[:, : d.dim], tol, max_iter)
    dp, vp, ip = _min_variance(P[:, : d.dim], tol, max_iter)
    return MinUncertainty(dx, dp, vx, vp, max(ix, ip))


def _canonical_xp(units: PhysicalUnits, dim: int):
    b, bd = build_ladder(dim)
    x = units.L0 * (bd.matrix + b.matrix)
    p = 1j * units.K0 * (bd.matrix - b.matrix)
    return x, p


def _approx_big(d: QDeformation, units: PhysicalUnits, dim: int):
    x, p = _canonical_xp(units, dim)
    L0, K0 = units.L0, units.K0
    e = d.epsilon
    X = d.L * ((1 - e / 4) * x / L0 + (e / 16) * (x @ x @ x / L0**3 + p @ x @ p / (K0**2 * L0)))
    P = d.K * ((1 - e / 4) * p / K0 + (e / 16) * (p @ p @ p / K0**3 + x @ p @ x / (L0**2 * K0)))
    return X, P


def build_egup_XP_approx(d: QDeformation, units: PhysicalUnits = NATURAL, pad: int = PAD):
    """First-order-in-``q - 1`` position and momentum from canonical ladders.

    ``X = L[(1 - e/4) x/L0 + (e/16)(x^3/L0^3 + p x p/(K0^2 L0))]`` and the
    mirror expression for ``P``, with ``e = q - 1``.
    """
    X, P = _approx_big(d, units, d.dim + pad)
    n = d.dim
    return FockOperator(X[:n, :n]), FockOperator(P[:n, :n])


@dataclass(frozen=True)
class SqueezedUncertainties:
    dX: float
    dP: float
    route: str
    tail: float = 0.0


def _approx_apply(d: QDeformation, units: PhysicalUnits, which: str):
    """First-order operators acting on momentum-space grid states."""
    L0, K0, hbar = units.L0, units.K0, units.hbar
    e = d.epsilon

    def x(psi):
        dv = differentiate(psi)
        return GridWaveFunction(psi.grid, 1j * hbar * dv.amplitudes, dv.boundary_warning)

    def p(psi):
        return psi.multiply(psi.p)

    if which == "X":
        def op(psi):
            xp = x(psi)
            return d.L * (
                (1 - e / 4) / L0 * xp
                + (e / 16) * (x(x(xp)) * (1 / L0**3) + p(x(p(psi))) * (1 / (K0**2 * L0)))
            )
    else:
        def op(psi):
            pp = p(psi)
            return d.K * (
                (1 - e / 4) / K0 * pp
                + (e / 16) * (p(p(pp)) * (1 / K0**3) + x(p(x(psi))) * (1 / (L0**2 * K0)))
            )
    return op


def egup_squeezed_uncertainties(
    d: QDeformation,
    units: PhysicalUnits,
    params: SqueezedParams,
    route: str = "fock",
    tail_tol: float = 1e-8,
) -> SqueezedUncertainties:
    """Spreads of the first-order EGUP operators in a squeezed state.

    ``route="fock"`` projects the state on ``N + 1`` number states and uses
    the matrices of :func:`build_egup_XP_approx`; it refuses states whose
    projection loses more than ``tail_tol`` of the norm.  ``route="grid"``
    applies the same polynomial operators directly to the momentum-space
    wavefunction and works for any squeezing.
    """
    if route == "fock":
        grid = squeezed_grid(params, n_points=4097)
        psi = squeezed_state(params, grid, units)
        try:
            c = project_to_fock(psi, units, d.N, tail_tol=tail_tol)
        except ValueError as exc:
            raise ValueError(f"{exc}") from None
        missing = 1.0 - c.norm() ** 2
        Xb, Pb = _approx_big(d, units, d.dim + PAD)
        n = d.dim
        out = []
        for A in (Xb, Pb):
            Ac = A[:n, :n] @ c.coeffs
            mean = float(np.vdot(c.coeffs, Ac).real)
            full = A[:, :n] @ c.coeffs
            second = float(np.vdot(full, full).real)
            out.append(math.sqrt(max(second - mean * mean, 0.0)))
        return SqueezedUncertainties(out[0], out[1], route, tail=missing)
    if route == "grid":
        grid = squeezed_grid(params, n_points=4097)
        psi = squeezed_state(params, grid, units)
        dX = uncertainty(psi, _approx_apply(d, units, "X"), square="norm")
        dP = uncertainty(psi, _approx_apply(d, units, "P"), square="norm")
        return SqueezedUncertainties(dX, dP, route)
    raise ValueError("route must be 'fock' or 'grid'")


def laurent_fit(a_values: Sequence[float], values: Sequence[float], powers: Sequence[int]):
    """Least-squares coefficients ``c_k`` of ``sum_k c_k a^k``.

    Returns ``(coefficients, max relative residual)``.
    """
    a = np.asarray(a_values, dtype=float)
    y = np.asarray(values, dtype=float)
    basis = np.column_stack([a**k for k in powers])
    # scale rows so every sample counts relatively
    w = 1.0 / np.abs(y)
    coef, *_ = np.linalg.lstsq(basis * w[:, None], y * w, rcond=None)
    resid = float(np.max(np.abs(basis @ coef - y) * w))
    return coef, resid


def q_oscillator_levels(d: QDeformation, units: PhysicalUnits, count: int) -> np.ndarray:
    """Closed form ``hbar omega ([n] + [n+1]) / 2``."""
    n = np.arange(count, dtype=float)
    return units.hbar * units.omega * 0.5 * (q_number(d.q, n) + q_number(d.q, n + 1))


def egup_oscillator_spectrum(d: QDeformation, units: PhysicalUnits = NATURAL, count: int = 10) -> np.ndarray:
    """Lowest eigenvalues of ``hbar omega (P^2/4K0^2 + X^2/4L0^2)`` built from
    the exact deformed ladders in oscillator mode."""
    if d.mode != OSCILLATOR_MODE and not (
        math.isclose(d.L, units.L0, rel_tol=1e-12) and math.isclose(d.K, units.K0, rel_tol=1e-12)
    ):
        raise ValueError("oscillator spectrum needs L = L0 and K = K0 (oscillator mode)")
    if count > d.dim - GUARD_BAND:
        raise ValueError(f"count must leave a guard band of {GUARD_BAND} levels below the truncation")
    _, _, X2, P2 = _products(d, pad=1)
    H = units.hbar * units.omega * (P2 / (4 * units.K0**2) + X2 / (4 * units.L0**2))
    H = 0.5 * (H + H.conj().T)
    values = linalg.eigvalsh(H, subset_by_index=[0, count - 1])
    return np.sort(values.real)
