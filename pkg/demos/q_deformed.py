"""
q-deformed ladders
==================

Ladders obeying a a^dag - q a^dag a = 1 give an oscillator with levels
([n] + [n+1])/2 and, built into position and momentum, a floor on both
uncertainties.
"""

import math

import numpy as np

from guplab.egup import (
    QDeformation,
    egup_min_uncertainty,
    egup_oscillator_spectrum,
    egup_squeezed_uncertainties,
    q_number,
)
from guplab.grid import NATURAL
from guplab.states import SqueezedParams

print("[n] for q = 1.1:", q_number(1.1, np.arange(6)))

for eps in (1e-3, 1e-2):
    d = QDeformation.oscillator_mode(1 + eps, NATURAL, N=40)
    E = egup_oscillator_spectrum(d, NATURAL, 11)
    n = np.arange(1, 11)
    print(f"eps={eps:g}: shift / (eps/2 n^2):", " ".join(f"{r:.4f}" for r in (E[1:] - n - 0.5) / (0.5 * eps * n**2)))

# The position floor needs many number states when q is close to one.
print("\nq      N    dx_min / L sqrt((q-1)/q)")
for q in (1.05, 1.1, 1.2):
    for N in (60, 100, 200):
        d = QDeformation.paper_consistent(q, N=N)
        print(f"{q:<6} {N:<4} {egup_min_uncertainty(d).dx_min / math.sqrt((q - 1) / q):.4f}")

# Squeezed states: the spread diverges at both ends of the squeezing range.
d = QDeformation.oscillator_mode(1.01, NATURAL)
print("\na        dX")
for a in np.geomspace(1e-4, 1e4, 9):
    print(f"{a:<8.0e} {egup_squeezed_uncertainties(d, NATURAL, SqueezedParams(a, 1.0, 1.0), route='grid').dX:.5f}")
