"""
Minimal length from a deformed commutator
=========================================

With [X, P] = i hbar (1 + beta p^2) no state localises better than
hbar sqrt(beta).  Squeezed Gaussians approach the floor but never reach it;
the minimum-length state sits exactly on it.
"""

import math

import numpy as np

from guplab.deform import quadratic
from guplab.grid import uncertainty
from guplab.operators import check_gup, momentum_action, position_action
from guplab.states import (
    MLParams,
    SqueezedParams,
    gaussian_deformed_dx,
    min_dx_over_gaussians,
    ml_grid,
    ml_state,
    squeezed_grid,
    squeezed_state,
)

beta = 0.01
spec = quadratic(beta)
X = position_action(spec)

# Squeezing a Gaussian in momentum (small a) first shrinks the position
# spread, then the deformation takes over and it grows again.
print("a        dX(grid)    dX(closed form)")
for a in np.geomspace(1e-4, 1e2, 7):
    sp = SqueezedParams(a)
    psi = squeezed_state(sp, squeezed_grid(sp))
    print(f"{a:<8.0e} {uncertainty(psi, X):<11.6f} {gaussian_deformed_dx(sp, beta):.6f}")

best = min_dx_over_gaussians(beta)
print(f"\nbest Gaussian: a* = {best.a_star:.5f}, dX = {best.dx_min:.5f}  (floor {math.sqrt(beta):.5f})")

# The uncertainty relation holds with the deformed right-hand side everywhere.
sp = SqueezedParams(best.a_star)
r = check_gup(spec, squeezed_state(sp, squeezed_grid(sp)))
print(f"at a*: dX dP = {r.lhs:.6f} >= (1/2)<f> = {r.rhs:.6f}")

# The minimum-length state decays only like p^-2, hence the very long grid.
for xi in (0.0, 0.5):
    grid = ml_grid(beta, xi)
    phi = ml_state(MLParams(xi, beta), grid)
    Xs = position_action(spec, form="sandwich")
    dx = uncertainty(phi, Xs, square="norm")
    dp = uncertainty(phi, momentum_action(), square="norm")
    print(f"ML state xi={xi}: {grid.n_points} points, dX = {dx:.7f}, dP = {dp:.5f}")
