"""Cross-module invariant suite run by ``guplab check``.

Each check switches a deformation off (``beta = 0`` or ``q = 1``) and
compares the deformed routine with its canonical counterpart, or tests a
structural identity that must hold for any parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, List

import numpy as np

from . import egup, oscillator as osc
from .deform import momentum_cutoff, momentum_map_on, parse_deformation, quadratic, to_unit_measure
from .grid import NATURAL, MomentumGrid, PhysicalUnits, norm
from .operators import (
    canonical_x,
    check_gup,
    commutator_residual,
    deformed_X,
    deformed_X_sandwich,
    deformed_X_via_g,
    nonsymmetric_X,
)
from .states import SqueezedParams, gaussian_deformed_dx, gaussian_deformed_mean_x, squeezed_grid, squeezed_state
from .wigner import weyl_symbol_deformed_X, weyl_symbol_deformed_X2

__all__ = ["CheckResult", "COLLAPSE_TOL", "run_checks", "CHECKS"]

COLLAPSE_TOL = 1e-10


@dataclass(frozen=True)
class CheckResult:
    name: str
    error: float
    tol: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.error) and self.error <= self.tol)


def _states(units: PhysicalUnits):
    out = []
    for a, x0, p0 in [(1.0, 0.0, 0.0), (0.5, 1.0, -0.5), (3.0, -2.0, 1.0)]:
        sp = SqueezedParams(a / units.K0**2 * 0.5, x0 * units.L0, p0 * units.K0)
        out.append(squeezed_state(sp, squeezed_grid(sp, n_points=1025), units))
    return out


# deformations that vanish at beta = 0; the rational one bypasses the
# polynomial shortcut and exercises the general code paths
_COLLAPSING = ("1+beta*p^2", "1+beta*p^2/(1+p^2)")


def _rel(a, b) -> float:
    return norm(a - b) / max(norm(b), 1e-300)


def _x_forms(units):
    worst = 0.0
    for text in _COLLAPSING:
        spec = parse_deformation(text, {"beta": 0.0})
        for psi in _states(units):
            ref = canonical_x(psi, units)
            for op in (deformed_X, deformed_X_sandwich, deformed_X_via_g, nonsymmetric_X):
                worst = max(worst, _rel(op(spec, psi, units), ref))
    return worst


def _commutator(units):
    spec = parse_deformation(_COLLAPSING[1], {"beta": 0.0})
    return max(commutator_residual(spec, psi, units) for psi in _states(units))


def _momentum_map(units):
    grid = MomentumGrid(-5.0, 5.0, 101)
    worst = 0.0
    for text in _COLLAPSING:
        spec = parse_deformation(text, {"beta": 0.0})
        worst = max(worst, float(np.max(np.abs(momentum_map_on(spec, grid.points) - grid.points))))
    return worst


def _cutoff(units):
    return 0.0 if momentum_cutoff(parse_deformation(_COLLAPSING[0], {"beta": 0.0})) == math.inf else 1.0


def _unit_measure(units):
    spec = parse_deformation(_COLLAPSING[1], {"beta": 0.0})
    return max(_rel(to_unit_measure(psi, spec), psi) for psi in _states(units))


def _gup_saturation(units):
    spec = quadratic(0.0)
    worst = 0.0
    for psi in _states(units)[:1]:
        r = check_gup(spec, psi, units)
        worst = max(worst, abs(r.lhs - 0.5 * units.hbar), abs(r.rhs - 0.5 * units.hbar))
    return worst


def _gaussian_closed_form(units):
    worst = 0.0
    for a, x0, p0 in [(0.3, 0.0, 0.0), (2.0, 1.5, -0.7)]:
        sp = SqueezedParams(a, x0, p0)
        worst = max(worst, abs(gaussian_deformed_dx(sp, 0.0, units) - units.hbar * math.sqrt(a / 2)))
        worst = max(worst, abs(gaussian_deformed_mean_x(sp, 0.0) - x0))
    return worst


def _oscillator_matrix(units):
    spec = osc.OscillatorSpec(units, beta=0.0, truncation=60)
    H = osc.build_H_gup(spec).matrix
    return float(np.max(np.abs(H - osc.build_H0(units, spec.dim).matrix))) / (units.hbar * units.omega)


def _oscillator_V(units):
    spec = osc.OscillatorSpec(units, beta=0.0, truncation=20)
    grid = osc.oscillator_grid(units, 5)
    worst = 0.0
    for n in range(4):
        psi = osc.hermite_eigenstate(units, n, grid)
        worst = max(worst, norm(osc.apply_V_momentum(spec, psi)))
    return worst


def _wigner_symbols(units):
    spec = quadratic(0.0)
    x = np.linspace(-3, 3, 7)[:, None]
    p = np.linspace(-2, 2, 5)[None, :]
    e1 = np.max(np.abs(weyl_symbol_deformed_X(spec, x, p) - x))
    e2 = np.max(np.abs(weyl_symbol_deformed_X2(spec, x, p, units) - x**2))
    return float(max(e1, e2))


def _q_ladders(units):
    d = egup.QDeformation.oscillator_mode(1.0, units, N=40)
    a, _ = egup.build_q_ladders(d)
    b, _ = osc.build_ladder(d.dim)
    return float(np.max(np.abs(a.matrix - b.matrix)))


def _q_xp(units):
    d = egup.QDeformation.oscillator_mode(1.0, units, N=40)
    X, P = egup.build_egup_XP(d)
    Xa, Pa = egup.build_egup_XP_approx(d, units)
    x = osc.position_matrix(units, d.dim).matrix
    p = osc.momentum_matrix(units, d.dim).matrix
    errs = [X.matrix - x, Xa.matrix - x, P.matrix - p, Pa.matrix - p]
    return float(max(np.max(np.abs(e)) for e in errs)) / max(units.L0, units.K0)


def _q_numbers(units):
    n = np.arange(50)
    return float(np.max(np.abs(egup.q_number(1.0, n) - n)))


def _q_spectrum(units):
    d = egup.QDeformation.oscillator_mode(1.0, units, N=60)
    levels = egup.egup_oscillator_spectrum(d, units, count=30)
    exact = units.hbar * units.omega * (np.arange(30) + 0.5)
    return float(np.max(np.abs(levels - exact))) / (units.hbar * units.omega)


def _q_commutator(units):
    d = egup.QDeformation.paper_consistent(1.0, L=1.0, N=40, hbar=units.hbar)
    fit = egup.commutator_fit(d)
    return fit.residual


CHECKS: List[tuple] = [
    ("deformed position forms collapse to i hbar d/dp", _x_forms),
    ("commutator collapses to i hbar", _commutator),
    ("momentum map is the identity", _momentum_map),
    ("momentum cutoff is infinite", _cutoff),
    ("unit-measure map is the identity", _unit_measure),
    ("GUP saturates at hbar/2 for Gaussians", _gup_saturation),
    ("Gaussian closed forms reduce to canonical", _gaussian_closed_form),
    ("oscillator matrix equals H0", _oscillator_matrix),
    ("momentum-space perturbation vanishes", _oscillator_V),
    ("Weyl symbols reduce to x and x^2", _wigner_symbols),
    ("q ladders equal canonical ladders", _q_ladders),
    ("EGUP X, P (exact and first order) equal x, p", _q_xp),
    ("q-numbers equal n", _q_numbers),
    ("q-oscillator spectrum equals n + 1/2", _q_spectrum),
    ("EGUP commutator identity", _q_commutator),
]


def run_checks(units: PhysicalUnits = NATURAL, tol: float = COLLAPSE_TOL, report: Callable[[CheckResult], None] = None) -> List[CheckResult]:
    """Run every check; ``report`` is called after each one."""
    results = []
    for name, func in CHECKS:
        try:
            err = float(func(units))
        except Exception:  # a crash counts as a failure, not an abort
            err = math.inf
        r = CheckResult(name, err, tol)
        results.append(r)
        if report is not None:
            report(r)
    return results
