"""Sharpening Leighton's integral test with an exponential gauge.

Target: -u'' + (k - 1 - x) u = 0 on (0, pi), compared against sin.
With no gauge the certificate is pi (2k - pi) / 4, which is negative only
for k < pi/2.  The gauge G = c x (F = G/2) pushes the certified range up to
k ~ 1.672, close to where zero-free solutions first appear.
"""

import math

from sturmcomp.search import (
    certificate_threshold,
    leighton_closed_form,
    leighton_driver,
    oscillation_threshold,
)

print("plain Leighton test (G = 0)")
for k in (1.0, math.pi / 2, 1.672):
    rep = leighton_driver(k, 0.0, sweep_n=0)
    print(f"  k = {k:.4f}  value {rep.certificate.value: .6f}  closed form {leighton_closed_form(k): .6f}  {rep.verdict}")

print("\nwith the gauge G = 0.6 x")
for k in (1.672, 1.676):
    rep = leighton_driver(k, 0.6, sweep_n=64)
    s = rep.sweep
    print(f"  k = {k}  value {rep.certificate.value: .3e}  {rep.verdict}  ({s.with_zero}/{s.n} swept solutions vanish)")

kc = certificate_threshold(0.6)
ko = oscillation_threshold()
print(f"\nlargest k certified by G = 0.6 x:    {kc:.8f}")
print(f"zero-free solutions appear from k:  {ko:.8f}")
