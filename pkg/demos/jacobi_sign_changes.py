"""Sign changes of a three-term recurrence from a comparison certificate.

Reference: alpha = 1, beta = 0, whose solution from (0, 1) is 0, 1, 0, -1.
Lowering v by one gives a certificate of -1, so every solution of the
lowered recurrence changes sign on [0, 3].  The sweep over initial angles
includes every angle at which some u_n vanishes.
"""

import numpy as np

from sturmcomp.jacobi import JacobiProblem, dcon_value, discrete_compare, solve_recurrence

tilde = JacobiProblem.from_beta(0, 3, np.ones(3), np.zeros(2))
target = JacobiProblem(0, 3, np.ones(3), tilde.v - 1.0)
u = solve_recurrence(tilde, 0.0, 1.0)
print("reference solution:", u.u)
print("discrete certificate:", dcon_value(tilde, target, u))
print()
print(discrete_compare(tilde, target, u).to_text())
