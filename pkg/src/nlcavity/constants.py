"""Physical constants (SI, CODATA 2018 exact values where defined)."""

import math

hbar = 1.054571817e-34      # J s
h = 6.62607015e-34          # J s
k_B = 1.380649e-23          # J/K
e_charge = 1.602176634e-19  # C
Phi0 = h / (2.0 * e_charge)             # flux quantum, Wb
R_Q = h / (4.0 * e_charge**2)           # resistance quantum h/4e^2, Ohm
c_vacuum = 299792458.0      # m/s

TWO_PI = 2.0 * math.pi
