"""Position and momentum operators acting on momentum-space wavefunctions.

The deformed position operator is realised in three algebraically equal
ways, each useful as a cross-check of the others:

* differential: ``i hbar f psi' + (i hbar / 2) f' psi``
* sandwich: ``sqrt(f) (i hbar d/dp) (sqrt(f) psi)``
* split: ``x psi + sqrt(g) (i hbar d/dp)(sqrt(g) psi)`` with ``g = f - 1``

The momentum operator is multiplication by ``p`` in every case.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .deform import DeformationSpec
from .grid import (
    NATURAL,
    GridWaveFunction,
    PhysicalUnits,
    differentiate,
    inner_product,
    norm,
    passes_schwartz_heuristic,
    uncertainty,
)

__all__ = [
    "OperatorAction",
    "DomainError",
    "GupCheck",
    "canonical_x",
    "canonical_p",
    "deformed_X",
    "deformed_X_sandwich",
    "deformed_X_via_g",
    "deformed_P",
    "nonsymmetric_X",
    "position_action",
    "momentum_action",
    "commutator_residual",
    "check_gup",
    "GUP_SLACK",
]

GUP_SLACK = 1e-9


class DomainError(ValueError):
    pass


@dataclass(frozen=True)
class OperatorAction:
    """A labelled linear map on grid wavefunctions."""

    label: str
    apply: Callable[[GridWaveFunction], GridWaveFunction]
    symmetric: bool = True

    def __call__(self, psi: GridWaveFunction) -> GridWaveFunction:
        return self.apply(psi)


def _with_warning(out: GridWaveFunction, *sources: GridWaveFunction) -> GridWaveFunction:
    if any(s.boundary_warning for s in sources) and not out.boundary_warning:
        return GridWaveFunction(out.grid, out.amplitudes, boundary_warning=True)
    return out


def canonical_x(psi: GridWaveFunction, units: PhysicalUnits = NATURAL) -> GridWaveFunction:
    """``i hbar dpsi/dp``."""
    d = differentiate(psi)
    return GridWaveFunction(psi.grid, 1j * units.hbar * d.amplitudes, d.boundary_warning)


def canonical_p(psi: GridWaveFunction, units: PhysicalUnits = NATURAL) -> GridWaveFunction:
    """``p psi``."""
    return _with_warning(psi.multiply(psi.p), psi)


deformed_P = canonical_p


def deformed_X(spec: DeformationSpec, psi: GridWaveFunction, units: PhysicalUnits = NATURAL) -> GridWaveFunction:
    """Symmetric deformed position operator, differential form.

    Returns ``i hbar f(p) psi'(p) + (i hbar/2) f'(p) psi(p)``.
    """
    if spec.is_canonical():
        return canonical_x(psi, units)
    p = psi.p
    d = differentiate(psi)
    amps = 1j * units.hbar * (spec.f(p) * d.amplitudes + 0.5 * spec.df(p) * psi.amplitudes)
    return GridWaveFunction(psi.grid, amps, d.boundary_warning)


def deformed_X_sandwich(spec: DeformationSpec, psi: GridWaveFunction, units: PhysicalUnits = NATURAL) -> GridWaveFunction:
    """``sqrt(f) x sqrt(f) psi``; same operator as :func:`deformed_X`.

    Better conditioned on slowly decaying states because only one product
    with ``sqrt(f)`` is differentiated.
    """
    if spec.is_canonical():
        return canonical_x(psi, units)
    root = np.sqrt(spec.f(psi.p))
    inner = canonical_x(psi.multiply(root), units)
    return _with_warning(inner.multiply(root), inner)


def deformed_X_via_g(spec: DeformationSpec, psi: GridWaveFunction, units: PhysicalUnits = NATURAL) -> GridWaveFunction:
    """``x psi + sqrt(g) x (sqrt(g) psi)`` with ``g = f - 1 >= 0``.

    Raises ``DeformationError("g not nonnegative")`` when ``g < 0`` on the grid.
    """
    root = spec.sqrt_g(psi.p)
    plain = canonical_x(psi, units)
    extra = canonical_x(psi.multiply(root), units).multiply(root)
    return _with_warning(plain + extra, plain, extra)


def nonsymmetric_X(spec: DeformationSpec, psi: GridWaveFunction, units: PhysicalUnits = NATURAL) -> GridWaveFunction:
    """``f(p) x psi``, the naive ordering, which is not symmetric."""
    x = canonical_x(psi, units)
    return _with_warning(x.multiply(spec.f(psi.p)), x)


_FORMS = {
    "differential": deformed_X,
    "sandwich": deformed_X_sandwich,
    "split": deformed_X_via_g,
    "nonsymmetric": nonsymmetric_X,
}


def position_action(spec: DeformationSpec, units: PhysicalUnits = NATURAL, form: str = "differential") -> OperatorAction:
    """Deformed position operator as an :class:`OperatorAction`."""
    try:
        kernel = _FORMS[form]
    except KeyError:
        raise ValueError(f"unknown form {form!r}; choose from {sorted(_FORMS)}") from None
    return OperatorAction(
        label=f"X[{form}; f = {spec.text}]",
        apply=lambda psi: kernel(spec, psi, units),
        symmetric=form != "nonsymmetric" or spec.is_canonical(),
    )


def momentum_action(units: PhysicalUnits = NATURAL) -> OperatorAction:
    return OperatorAction(label="p", apply=lambda psi: canonical_p(psi, units))


def commutator_residual(spec: DeformationSpec, psi: GridWaveFunction, units: PhysicalUnits = NATURAL, form: str = "differential") -> float:
    """``||([X, P] - i hbar f) psi|| / ||psi||``."""
    X = position_action(spec, units, form)
    xp = X(canonical_p(psi, units))
    px = canonical_p(X(psi), units)
    target = psi.multiply(1j * units.hbar * spec.f(psi.p))
    return norm(xp - px - target) / norm(psi)


@dataclass(frozen=True)
class GupCheck:
    """Outcome of an uncertainty-relation test.

    ``lhs = dx * dp`` and ``rhs = (hbar/2)|<f(p)>|``.
    """

    dx: float
    dp: float
    lhs: float
    rhs: float
    satisfied: bool

    @property
    def margin(self) -> float:
        return self.lhs - self.rhs


def check_gup(
    spec: DeformationSpec,
    psi: GridWaveFunction,
    units: PhysicalUnits = NATURAL,
    form: str = "differential",
    require_schwartz: bool = True,
) -> GupCheck:
    """Test ``dX dP >= (hbar/2)|<f(p)>|`` in the state ``psi``.

    Parameters
    ----------
    spec : DeformationSpec
    psi : GridWaveFunction
        normalised state.
    units : PhysicalUnits
    form : {"differential", "sandwich", "split"}
        which realisation of the position operator to use.
    require_schwartz : bool
        refuse states that fail the boundary-decay heuristic.

    Raises
    ------
    DomainError
        "state outside physical domain heuristic".
    """
    if require_schwartz and not passes_schwartz_heuristic(psi):
        raise DomainError("state outside physical domain heuristic")
    X = position_action(spec, units, form)
    P = momentum_action(units)
    dx = uncertainty(psi, X)
    dp = uncertainty(psi, P)
    mean_f = inner_product(psi, psi.multiply(spec.f(psi.p)))
    lhs = dx * dp
    rhs = 0.5 * units.hbar * abs(mean_f)
    return GupCheck(dx=dx, dp=dp, lhs=lhs, rhs=rhs, satisfied=bool(lhs >= rhs - GUP_SLACK))
