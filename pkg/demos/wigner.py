"""
Phase-space picture
===================

Wigner functions of grid states, their marginals, and averages of the
deformed position through its Weyl symbols.
"""

import numpy as np

from guplab.deform import quadratic
from guplab.grid import NATURAL, inner_product, norm
from guplab.operators import deformed_X
from guplab.oscillator import hermite_eigenstate, oscillator_grid
from guplab.wigner import (
    default_x_grid,
    marginals,
    phase_space_expectation,
    weyl_symbol_deformed_X,
    weyl_symbol_deformed_X2,
    wigner_function,
)

grid = oscillator_grid(NATURAL, 3, n_points=1025)
spec = quadratic(0.1)

for n in range(4):
    psi = hermite_eigenstate(NATURAL, n, grid)
    W = wigner_function(psi, default_x_grid(psi, n=257, widths=12.0))
    mom, _ = marginals(W)
    rows = np.searchsorted(psi.p, W.p)
    X = deformed_X(spec, psi)
    sym1 = phase_space_expectation(W, lambda x, p: weyl_symbol_deformed_X(spec, x, p))
    sym2 = phase_space_expectation(W, lambda x, p: weyl_symbol_deformed_X2(spec, x, p))
    print(
        f"n={n}: min W = {W.values.min():+.4f}, total = {W.total():.8f}, "
        f"marginal err = {np.max(np.abs(mom - np.abs(psi.amplitudes[rows]) ** 2)):.1e}, "
        f"<X> {sym1:+.2e} vs {inner_product(psi, X).real:+.2e}, "
        f"<X^2> {sym2:.8f} vs {norm(X) ** 2:.8f}"
    )

# Odd number states are negative at the origin: W(0,0) = -1/pi for n = 1.
W = wigner_function(hermite_eigenstate(NATURAL, 1, grid), np.array([0.0]), rows=2000)
print(f"\nW_1(0, 0) = {W.values[0, np.argmin(np.abs(W.p))]:.8f}, -1/pi = {-1 / np.pi:.8f}")
