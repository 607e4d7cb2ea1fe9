"""Finding tilde solutions and gauges that make the certificate negative.

``shoot_vanishing`` produces the endpoint-vanishing tilde solution (a yes/no
test: ``u(a) = 0`` fixes the solution up to scale).  ``linear_gauge_scan``
searches the family ``G = c x``, ``F = c x / 2`` which removes the ``A``
and ``B`` terms when ``p = pt`` and ``s = st = r = rt = 0``.
``leighton_driver`` is the worked example ``-u'' + (k - 1 - x) u = 0`` on
``(0, pi)`` compared with ``sin``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .coeffs import CoefficientSet, GaugeFunction, coefficient_set
from .comparison import Certificate, ComparisonProblem, Report, compare, evaluate_con
from .solver import DEFAULT_TOL, Solution, solve_ivp

__all__ = [
    "ShootingError",
    "ScanResult",
    "shoot_vanishing",
    "linear_gauge",
    "linear_gauge_scan",
    "leighton_problem",
    "leighton_driver",
    "leighton_closed_form",
    "certificate_threshold",
    "oscillation_threshold",
]


class ShootingError(ValueError):
    """No solution with ``u(a) = 0`` vanishes at ``b``; ``residual`` is the scaled ``u(b)``."""

    def __init__(self, residual: float, b: float):
        super().__init__(f"the solution with u(a) = 0 does not vanish at b = {b:.10g}: u(b)/max|u| = {residual:.6g}")
        self.residual = residual


def shoot_vanishing(c: CoefficientSet, tol: float = 1e-8, solver_tol: float | None = None) -> Solution:
    """The solution with ``(u, v)(a) = (0, 1)``, provided ``|u(b)| <= tol * max|u|``.

    >>> import numpy as np
    >>> c = coefficient_set(0, np.pi, q="-1")
    >>> round(float(shoot_vanishing(c).u(np.pi / 2)), 9)
    1.0
    """
    if c.singular[0]:
        raise ValueError("shooting needs a regular left endpoint")
    sol = solve_ivp(c, c.a, 0.0, 1.0, tol=solver_tol or min(DEFAULT_TOL, tol * 1e-2))
    xs = np.union1d(sol.mesh(), np.linspace(c.a, c.b, 201))
    scale = float(np.max(np.abs(sol.u(xs))))
    end = float(sol.u(c.b))
    if abs(end) > tol * scale:
        raise ShootingError(end / scale, c.b)
    return sol


def linear_gauge(a: float, b: float, c: float) -> tuple[GaugeFunction, GaugeFunction]:
    """``F = c x / 2`` and ``G = c x``."""
    return GaugeFunction.linear(a, b, c / 2), GaugeFunction.linear(a, b, c)


@dataclass
class ScanResult:
    best_c: float
    best: Certificate
    table: list = field(default_factory=list)  # (c, value, err), sorted by c

    CSV_FIELDS = ("c", "value", "err")

    def csv_rows(self):
        return [(repr(float(c)), repr(float(v)), repr(float(e))) for c, v, e in self.table]


def linear_gauge_scan(
    tilde: CoefficientSet,
    target: CoefficientSet,
    tilde_u: Solution,
    c_range: tuple[float, float] = (-2.0, 2.0),
    steps: int = 41,
    tol: float = DEFAULT_TOL,
    workers: int | None = None,
    refine: bool = True,
) -> ScanResult:
    """Minimise the certificate over ``G = c x``, ``F = c x / 2``.

    A grid scan (evaluated concurrently when ``workers`` is given) is followed
    by bounded Brent refinement between the neighbours of the best grid point.
    The best grid value is kept when refinement does not improve on it; ties
    go to the smallest ``c``.
    """
    lo, hi = map(float, c_range)
    if not lo < hi:
        raise ValueError("c range must satisfy lo < hi")
    if steps < 2:
        raise ValueError("need at least two grid points")
    a, b = tilde.a, tilde.b

    def cert_at(c):
        F, G = linear_gauge(a, b, c)
        return evaluate_con(ComparisonProblem(tilde, target, F, G), tilde_u, tol)

    grid = np.linspace(lo, hi, steps)
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            certs = list(pool.map(cert_at, grid))
    else:
        certs = [cert_at(c) for c in grid]
    table = {float(c): cert for c, cert in zip(grid, certs)}
    k = int(np.argmin([cert.value for cert in certs]))  # first minimum, i.e. lowest c
    best_c, best = float(grid[k]), certs[k]
    if refine:
        left, right = grid[max(k - 1, 0)], grid[min(k + 1, steps - 1)]
        res = minimize_scalar(
            lambda c: cert_at(c).value, bounds=(left, right), method="bounded", options={"xatol": max(tol, 1e-10)}
        )
        c_ref = float(res.x)
        cert = cert_at(c_ref)
        table[c_ref] = cert
        if cert.value < best.value:
            best_c, best = c_ref, cert
    rows = [(c, cert.value, cert.err) for c, cert in sorted(table.items())]
    return ScanResult(best_c, best, rows)


# -- the worked example ------------------------------------------------------------


def leighton_problem(k: float, c: float, tol: float = DEFAULT_TOL):
    """Coefficient sets, gauges and ``ut = sin`` for the worked example."""
    a, b = 0.0, math.pi
    tilde = coefficient_set(a, b, q="-1", tol=tol)
    target = coefficient_set(a, b, q="k - 1 - x", params={"k": k}, tol=tol)
    F, G = linear_gauge(a, b, c)
    tilde_u = solve_ivp(tilde, a, 0.0, 1.0, tol=tol)
    return ComparisonProblem(tilde, target, F, G), tilde_u


def leighton_closed_form(k: float) -> float:
    """Certificate value with ``G = 0``: ``pi (2k - pi) / 4``."""
    return math.pi * (2 * k - math.pi) / 4


def leighton_driver(k: float, c: float, tol: float = DEFAULT_TOL, sweep_n: int = 64) -> Report:
    """Certificate ``int (k - x + c^2/4) e^(cx) sin^2`` on ``(0, pi)`` with sweep evidence.

    >>> r = leighton_driver(2.0, 0.0, sweep_n=0)
    >>> round(r.certificate.value, 8), str(r.verdict)
    (0.67419155, 'Positive')
    """
    prob, tilde_u = leighton_problem(k, c, tol)
    report = compare(prob, tilde_u, sweep_n, tol, kind="leighton")
    report.details["k"] = repr(float(k))
    report.details["c"] = repr(float(c))
    if c == 0:
        report.details["closed form"] = f"{leighton_closed_form(k):.12g}"
    return report


def certificate_threshold(c: float, tol: float = DEFAULT_TOL) -> float:
    """Largest ``k`` with a non-positive certificate for the gauge ``G = c x``.

    The certificate is affine in ``k``, so two evaluations fix the root.
    """
    v0 = evaluate_con(*leighton_problem(0.0, c, tol), tol).value
    v1 = evaluate_con(*leighton_problem(1.0, c, tol), tol).value
    return -v0 / (v1 - v0)


def oscillation_threshold(bracket: tuple[float, float] = (1.6, 1.8), tol: float = 1e-10) -> float:
    """The ``k`` at which zero-free solutions of the target appear.

    That happens when the solution with ``u(0) = 0`` first reaches ``u(pi) = 0``
    without an interior zero; found by root bracketing in ``k``.
    """

    def end_value(k):
        c = coefficient_set(0.0, math.pi, q="k - 1 - x", params={"k": k})
        return float(solve_ivp(c, 0.0, 0.0, 1.0, tol=1e-12).u(math.pi))

    return brentq(end_value, *bracket, xtol=tol)
