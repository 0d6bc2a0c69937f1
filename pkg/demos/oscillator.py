"""
Deformed harmonic oscillator
============================

The deformed position operator makes H = P^2/2m + m omega^2 X^2/2 shift
every level upward.  First-order perturbation theory gives
(beta/2)(n^2 + n + 1/2) in natural units; diagonalising in a truncated number
basis shows how far that holds.
"""

from guplab.grid import NATURAL, inner_product
from guplab.oscillator import (
    OscillatorSpec,
    apply_V_momentum,
    build_H_gup,
    delta_E_perturbative,
    hermite_eigenstate,
    oscillator_grid,
    spectrum,
)

for beta in (1e-4, 1e-3, 1e-2):
    spec = OscillatorSpec(NATURAL, beta=beta, truncation=200)
    E = spectrum(build_H_gup(spec), 11)
    ratios = [(E[n] - (n + 0.5)) / delta_E_perturbative(spec, n) for n in range(11)]
    print(f"beta={beta:g}: shift / first order, n=0..10:", " ".join(f"{r:.4f}" for r in ratios))

# The momentum-space perturbation contains pieces linear and quadratic in
# beta.  The linear piece reproduces first-order theory exactly; the full
# operator carries the O(beta^2) remainder as well.
spec = OscillatorSpec(NATURAL, beta=1e-3)
grid = oscillator_grid(NATURAL, 5)
print("\nn   <V> linear / dE    <V> full / dE")
for n in range(6):
    psi = hermite_eigenstate(NATURAL, n, grid)
    dE = delta_E_perturbative(spec, n)
    lin = inner_product(psi, apply_V_momentum(spec, psi, order=1)).real / dE
    full = inner_product(psi, apply_V_momentum(spec, psi)).real / dE
    print(f"{n}   {lin:.12f}     {full:.6f}")
