"""Point-mass potentials: a tent-shaped solution and an exact certificate.

The potential -4 delta at 1/2 has the tent min(x, 1 - x) as the solution
vanishing at both ends.  Adding a further point mass -1 delta at 1/4 to the
target gives the certificate -u(1/4)^2 = -1/16, summed exactly.
"""

import numpy as np

from sturmcomp import PotentialAntiderivative, build_coefficients, distributional_compare, solve_ivp
from sturmcomp.distributional import jump_residuals

tilde_V = PotentialAntiderivative.from_parts(0.0, 1.0, "0", [(0.5, -4.0)])
target_V = PotentialAntiderivative.from_parts(0.0, 1.0, "0", [(0.5, -4.0), (0.25, -1.0)])

tent = solve_ivp(build_coefficients(tilde_V), 0.0, 0.0, 1.0)
xs = np.linspace(0, 1, 5)
print("tent solution:", np.round(tent.u(xs), 12))
for at, res in jump_residuals(tilde_V, tent):
    print(f"jump condition at {at}: residual {res:.1e}")

rep = distributional_compare(tilde_V, target_V, tent, sweep_n=64)
print()
print(rep.to_text())
