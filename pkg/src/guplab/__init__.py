"""Quantum mechanics with a deformed position-momentum commutator.

Momentum-space grids and operators for ``[X, P] = i hbar f(P)``, the special
states of the quadratic deformation, the deformed harmonic oscillator in a
Fock basis, Wigner functions, and the q-deformed ladder algebra.
"""

from .grid import NATURAL, GridWaveFunction, MomentumGrid, PhysicalUnits
from .deform import DeformationSpec, parse_deformation, quadratic, momentum_map, momentum_cutoff
from .operators import check_gup, deformed_X, commutator_residual
from .states import SqueezedParams, MLParams, squeezed_state, ml_state, deformed_eigenstate
from .oscillator import OscillatorSpec, build_H_gup, spectrum
from .wigner import wigner_function, PhaseSpaceField
from .egup import QDeformation, egup_min_uncertainty, egup_oscillator_spectrum

__version__ = "0.1.0"

__all__ = [
    "NATURAL",
    "GridWaveFunction",
    "MomentumGrid",
    "PhysicalUnits",
    "DeformationSpec",
    "parse_deformation",
    "quadratic",
    "momentum_map",
    "momentum_cutoff",
    "check_gup",
    "deformed_X",
    "commutator_residual",
    "SqueezedParams",
    "MLParams",
    "squeezed_state",
    "ml_state",
    "deformed_eigenstate",
    "OscillatorSpec",
    "build_H_gup",
    "spectrum",
    "wigner_function",
    "PhaseSpaceField",
    "QDeformation",
    "egup_min_uncertainty",
    "egup_oscillator_spectrum",
]
