"""Comparison certificates for two equations of the form

    -(p (u' + s u))' + r p (u' + s u) + q u = 0.

Given a solution ``ut`` of the tilde equation vanishing at ``a`` and ``b``
and gauge functions ``F``, ``G``, the certificate is

    int_a^b [A w^2 + B w ut + C ut^2],      w = ut' + st ut = vt / pt,

with

    A = p e^(2F+S-R) - pt e^G
    B = 2 p (f + s - st) e^(2F+S-R) - pt (g + rt - st) e^G
    C = (q + p (f + s - st)^2) e^(2F+S-R) - qt e^G.

A non-positive value forces every real solution of the target equation to
vanish in ``(a, b)`` unless it is a multiple of ``ut e^F``; a negative value
rules out the exception.
"""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial import Chebyshev

from .coeffs import CoefficientSet, GaugeFunction, PiecewiseFunction
from .quadrature import QuadratureError, integrate, integrate_many
from .solver import DEFAULT_TOL, Solution, find_zeros, solutions_at_angles, solve_ivp, theta_sweep

__all__ = [
    "Verdict",
    "Certificate",
    "ComparisonProblem",
    "ABC",
    "Report",
    "SweepSummary",
    "IntegrabilityError",
    "HypothesisError",
    "classify",
    "quadratic_form",
    "abc_coefficients",
    "evaluate_con",
    "gauge_identity_residual",
    "gauged_function",
    "compare",
    "sweep_target",
    "sturm_picone",
    "separation",
    "stieltjes_integral",
]

_EPS = np.finfo(float).eps


class Verdict(str, enum.Enum):
    STRICTLY_NEGATIVE = "StrictlyNegative"
    WEAK_NONPOSITIVE = "WeakNonpositive"
    INCONCLUSIVE = "Inconclusive"
    POSITIVE = "Positive"

    def __str__(self):
        return self.value


class IntegrabilityError(ValueError):
    """One of ``A/pt^2``, ``B/pt``, ``C`` failed the integrability check."""

    def __init__(self, which: str, detail: str):
        super().__init__(f"{which} is not integrable: {detail}")
        self.which = which


class HypothesisError(ValueError):
    """A theorem hypothesis fails; ``witness`` is an offending point when known."""

    def __init__(self, message: str, witness: float | None = None):
        super().__init__(message if witness is None else f"{message} (at x = {witness:.10g})")
        self.witness = witness


def classify(value: float, err: float) -> Verdict:
    """Verdict bands: a value within ``err`` of zero is only weakly non-positive."""
    if not (math.isfinite(value) and math.isfinite(err)) or err < 0:
        return Verdict.INCONCLUSIVE
    if value + err < 0:
        return Verdict.STRICTLY_NEGATIVE
    if value - err > 0:
        return Verdict.POSITIVE
    if abs(value) <= err:
        return Verdict.WEAK_NONPOSITIVE
    return Verdict.INCONCLUSIVE


@dataclass(frozen=True)
class Certificate:
    value: float
    err: float
    verdict: Verdict
    breakdown: tuple[float, float, float]
    breakdown_err: tuple[float, float, float] = (0.0, 0.0, 0.0)

    @property
    def parts(self) -> dict[str, float]:
        return dict(zip(("A", "B", "C"), self.breakdown))


@dataclass
class ComparisonProblem:
    """Tilde (reference) and target coefficient sets with the gauges ``F``, ``G``."""

    tilde: CoefficientSet
    target: CoefficientSet
    F: GaugeFunction
    G: GaugeFunction

    def __post_init__(self):
        ends = {(self.tilde.a, self.tilde.b), (self.target.a, self.target.b), (self.F.a, self.F.b), (self.G.a, self.G.b)}
        if len(ends) != 1:
            raise ValueError("coefficient sets and gauges must live on one interval")

    @classmethod
    def plain(cls, tilde: CoefficientSet, target: CoefficientSet) -> "ComparisonProblem":
        """``F = G = 0``."""
        return cls(tilde, target, GaugeFunction.zero(tilde.a, tilde.b), GaugeFunction.zero(tilde.a, tilde.b))

    @property
    def a(self):
        return self.tilde.a

    @property
    def b(self):
        return self.tilde.b

    @property
    def breakpoints(self) -> np.ndarray:
        return np.union1d(
            np.union1d(self.tilde.breakpoints, self.target.breakpoints),
            np.union1d(self.F.breakpoints, self.G.breakpoints),
        )

    @property
    def singular(self) -> tuple[bool, bool]:
        return tuple(self.tilde.singular[i] or self.target.singular[i] for i in (0, 1))

    def values(self, x):
        """``A, B, C`` at ``x`` plus the magnitudes of the subtracted terms."""
        t, c = self.tilde, self.target
        x = np.asarray(x, dtype=float)
        with np.errstate(over="ignore", invalid="ignore"):
            w_target = np.exp(2 * self.F(x) + c.S(x) - c.R(x))
            w_tilde = np.exp(self.G(x))
            p, pt = c.p(x), t.p(x)
            shift = self.F.deriv(x) + c.s(x) - t.s(x)
            gterm = self.G.deriv(x) + t.r(x) - t.s(x)
            a1, a2 = p * w_target, pt * w_tilde
            b1, b2 = 2 * p * shift * w_target, pt * gterm * w_tilde
            c1, c2 = (c.q(x) + p * shift**2) * w_target, t.q(x) * w_tilde
        return (a1 - a2, b1 - b2, c1 - c2), (np.abs(a1) + np.abs(a2), np.abs(b1) + np.abs(b2), np.abs(c1) + np.abs(c2))


@dataclass(frozen=True)
class ABC:
    """Evaluable ``A``, ``B``, ``C`` with the union of all input breakpoints."""

    problem: ComparisonProblem
    breakpoints: np.ndarray

    def A(self, x):
        return self.problem.values(x)[0][0]

    def B(self, x):
        return self.problem.values(x)[0][1]

    def C(self, x):
        return self.problem.values(x)[0][2]

    def __iter__(self):
        return iter((self.A, self.B, self.C))


def abc_coefficients(prob: ComparisonProblem, check: bool = True) -> ABC:
    """``A``, ``B``, ``C`` of the certificate; checks ``A/pt^2``, ``B/pt``, ``C`` integrable."""
    abc = ABC(prob, prob.breakpoints)
    if check:
        pt = prob.tilde.p
        tests = {
            "A/pt^2": lambda x: np.abs(prob.values(x)[0][0]) / pt(x) ** 2,
            "B/pt": lambda x: np.abs(prob.values(x)[0][1]) / pt(x),
            "C": lambda x: np.abs(prob.values(x)[0][2]),
        }
        for name, fn in tests.items():
            try:
                integrate(fn, prob.a, prob.b, breakpoints=abc.breakpoints, singular=prob.singular, atol=1e-9, rtol=1e-9)
            except QuadratureError as exc:
                raise IntegrabilityError(name, str(exc)) from exc
    return abc


# -- checks on supplied solutions --------------------------------------------------


def _sample_grid(c: CoefficientSet, n: int = 401) -> np.ndarray:
    return np.union1d(np.linspace(c.a, c.b, n), c.edges)


def _check_vanishing(sol: Solution, vanish_tol: float):
    xs = _sample_grid(sol.coeffs)
    u = sol.u(xs)
    scale = float(np.max(np.abs(u)))
    if scale == 0:
        raise ValueError("the tilde solution is trivial")
    for end, val in (("a", u[0]), ("b", u[-1])):
        if abs(val) > vanish_tol * scale:
            raise HypothesisError(f"tilde solution does not vanish at {end}: u = {val:.3e} (scale {scale:.3e})")


def _check_solves(sol: Solution, c: CoefficientSet, tol: float):
    if sol.coeffs is c or sol.coeffs.same_as(c):
        return
    x_m = _interior_point(c)
    ref = solve_ivp(c, x_m, *sol.state(x_m), tol=tol)
    xs = _sample_grid(c, 201)
    diff = np.max(np.abs(ref.state(xs) - sol.state(xs)))
    scale = max(1.0, float(np.max(np.abs(sol.state(xs)))))
    if diff > 1e3 * max(tol, sol.accuracy) * scale:
        raise HypothesisError(f"supplied function does not solve the tilde equation (residual {diff:.3e})")


def _interior_point(c: CoefficientSet) -> float:
    edges = c.edges
    k = int(np.argmax(np.diff(edges)))
    lo, hi = edges[k], edges[k + 1]
    return float(lo + (hi - lo) * 0.4142135623730951)


# -- quadratic form and certificate ---------------------------------------------


def quadratic_form(c: CoefficientSet, phi, tol: float = DEFAULT_TOL, vanish_tol: float = 1e-7) -> float:
    """``int e^(S-R) (p (phi' + s phi)^2 + q phi^2)`` for ``phi`` vanishing at both ends.

    ``phi`` is either a :class:`Solution` of ``c`` (then ``phi' + s phi`` is
    read off the quasi-derivative as ``v/p``) or a pair ``(phi, dphi)`` of
    vectorised callables.
    """
    if isinstance(phi, Solution):
        sol = phi

        def fun(x):
            return sol.u(x)

        def combo(x):
            return sol.v(x) / c.p(x)

    else:
        fun, dfun = phi

        def combo(x):
            return dfun(x) + c.s(x) * fun(x)

    xs = _sample_grid(c)
    vals = fun(xs)
    scale = float(np.max(np.abs(vals)))
    if scale == 0:
        raise ValueError("phi must be non-trivial")
    if abs(vals[0]) > vanish_tol * scale or abs(vals[-1]) > vanish_tol * scale:
        raise HypothesisError(f"phi must vanish at a and b (phi(a) = {vals[0]:.3e}, phi(b) = {vals[-1]:.3e})")

    def integrand(x):
        with np.errstate(over="ignore", invalid="ignore"):
            return np.exp(c.S(x) - c.R(x)) * (c.p(x) * combo(x) ** 2 + c.q(x) * fun(x) ** 2)

    value, _ = integrate(integrand, c.a, c.b, breakpoints=c.breakpoints, singular=c.singular, atol=tol, rtol=0.0)
    return value


def gauged_function(prob: ComparisonProblem, tilde_u: Solution) -> tuple[Callable, Callable]:
    """``phi = e^F ut`` and its derivative, built from the quasi-derivative."""
    t = prob.tilde

    def phi(x):
        return np.exp(prob.F(x)) * tilde_u.u(x)

    def dphi(x):
        st = tilde_u.state(x)
        u, v = st[..., 0], st[..., 1]
        du = v / t.p(x) - t.s(x) * u
        return np.exp(prob.F(x)) * (prob.F.deriv(x) * u + du)

    return phi, dphi


def evaluate_con(
    prob: ComparisonProblem,
    tilde_u: Solution,
    tol: float = DEFAULT_TOL,
    vanish_tol: float = 1e-7,
) -> Certificate:
    """Evaluate the comparison certificate and classify it.

    The error combines the quadrature estimate, the propagated accuracy of
    ``tilde_u`` and the cancellation/rounding in ``A``, ``B``, ``C``.
    """
    _check_solves(tilde_u, prob.tilde, tol)
    _check_vanishing(tilde_u, vanish_tol)
    pt = prob.tilde.p
    delta = tilde_u.accuracy
    gauge_err = 2 * prob.F._anti.error_bound + prob.G._anti.error_bound
    coeff_err = gauge_err + prob.target.S.error_bound + prob.target.R.error_bound + 64 * _EPS

    def integrand(x):
        st = tilde_u.state(x)
        u, v = st[..., 0], st[..., 1]
        ptx = pt(x)
        w = v / ptx
        (A, B, C), (mA, mB, mC) = prob.values(x)
        prop = 2 * np.abs(A * w) / ptx + np.abs(B) * (np.abs(u) / ptx + np.abs(w)) + 2 * np.abs(C * u)
        mag = mA * w**2 + mB * np.abs(w * u) + mC * u**2
        return np.stack([A * w**2, B * w * u, C * u**2, prop, mag])

    try:
        vals, errs = integrate_many(
            integrand, prob.a, prob.b, breakpoints=prob.breakpoints, singular=prob.singular, atol=tol, rtol=0.0
        )
    except QuadratureError as exc:
        raise IntegrabilityError("certificate integrand", str(exc)) from exc
    parts = vals[:3]
    value = float(parts.sum())
    err = float(errs[:3].sum() + delta * vals[3] + coeff_err * vals[4])
    return Certificate(value, err, classify(value, err), tuple(float(t) for t in parts), tuple(float(t) for t in errs[:3]))


def gauge_identity_residual(
    tilde: CoefficientSet, tilde_u: Solution, G: GaugeFunction, tol: float = DEFAULT_TOL, vanish_tol: float = 1e-7
) -> float:
    """``int e^G [pt w^2 + pt (g + rt - st) w ut + qt ut^2]``, zero for every admissible ``G``.

    This is the tilde equation multiplied by ``e^G ut`` and integrated by
    parts; a non-zero value measures inconsistency of ``tilde_u``.
    """
    _check_solves(tilde_u, tilde, tol)
    _check_vanishing(tilde_u, vanish_tol)
    t = tilde

    def integrand(x):
        st = tilde_u.state(x)
        u, v = st[..., 0], st[..., 1]
        return np.exp(G(x)) * (v * v / t.p(x) + (G.deriv(x) + t.r(x) - t.s(x)) * v * u + t.q(x) * u * u)

    bps = np.union1d(t.breakpoints, G.breakpoints)
    value, _ = integrate(integrand, t.a, t.b, breakpoints=bps, singular=t.singular, atol=tol, rtol=0.0)
    return value


# -- sweeps and reports ------------------------------------------------------------


@dataclass
class SweepSummary:
    """Zero counts of target solutions ``(u, v)(x0) = (cos t, sin t)``."""

    x0: float
    thetas: np.ndarray
    zero_counts: np.ndarray
    refined: bool = False
    label: str = "solutions vanish in (a, b)"

    @property
    def n(self) -> int:
        return len(self.thetas)

    @property
    def with_zero(self) -> int:
        return int(np.sum(self.zero_counts > 0))

    @property
    def zero_free_thetas(self) -> np.ndarray:
        return self.thetas[self.zero_counts == 0]


def _sweep_point(c: CoefficientSet) -> float:
    if not c.singular[0]:
        return c.a
    if not c.singular[1]:
        return c.b
    return _interior_point(c)


def sweep_target(
    target: CoefficientSet, n: int, tol: float = DEFAULT_TOL, refine: bool = False, zero_tol: float = DEFAULT_TOL
) -> SweepSummary:
    """Count zeros in ``(a, b)`` for ``n`` equally spaced initial directions.

    With ``refine`` and no zero-free member, angles near the member whose
    zeros sit closest to the ends are resampled in shrinking windows.
    """
    x0 = _sweep_point(target)
    sols = theta_sweep(target, x0, n, tol)
    thetas = np.arange(n) * math.pi / n
    zero_lists = [find_zeros(s, tol=zero_tol) for s in sols]
    counts = np.array([len(z) for z in zero_lists])
    summary = SweepSummary(x0, thetas, counts)
    if not refine or np.any(counts == 0):
        return summary

    def margin(zl):
        pos = zl.positions
        return min(pos[0] - target.a, target.b - pos[-1])

    margins = np.array([margin(z) for z in zero_lists])
    best = float(thetas[int(np.argmax(margins))])
    width = math.pi / n
    extra_t, extra_c = [], []
    for _ in range(6):
        local = best + np.linspace(-width, width, 33)
        local_sols = solutions_at_angles(target, x0, local, tol, base=sols[0])
        local_z = [find_zeros(s, tol=zero_tol) for s in local_sols]
        extra_t.extend(local.tolist())
        extra_c.extend(len(z) for z in local_z)
        if any(len(z) == 0 for z in local_z):
            break
        m = np.array([margin(z) for z in local_z])
        best = float(local[int(np.argmax(m))])
        width /= 16.0
    all_t = np.concatenate([thetas, np.mod(extra_t, math.pi)])
    all_c = np.concatenate([counts, extra_c])
    order = np.argsort(all_t, kind="stable")
    return SweepSummary(x0, all_t[order], all_c[order], refined=True)


@dataclass
class Report:
    """Outcome of a comparison driver: certificate, sweep evidence and checks."""

    kind: str
    certificate: Certificate | None = None
    sweep: SweepSummary | None = None
    exceptional: bool | None = None
    exceptional_residual: float | None = None
    consistent: bool = True
    details: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    @property
    def verdict(self) -> Verdict | None:
        return self.certificate.verdict if self.certificate else None

    CSV_FIELDS = (
        "kind",
        "value",
        "err",
        "verdict",
        "A_part",
        "B_part",
        "C_part",
        "sweep_n",
        "sweep_with_zero",
        "sweep_zero_free",
        "exceptional",
        "consistent",
    )

    def csv_record(self) -> list[str]:
        c = self.certificate
        s = self.sweep
        fmt = lambda v: "" if v is None else repr(float(v))  # noqa: E731
        return [
            self.kind,
            fmt(c.value if c else None),
            fmt(c.err if c else None),
            str(c.verdict) if c else "",
            *(fmt(t) for t in (c.breakdown if c else (None, None, None))),
            str(s.n) if s else "",
            str(s.with_zero) if s else "",
            str(s.n - s.with_zero) if s else "",
            "" if self.exceptional is None else str(bool(self.exceptional)).lower(),
            str(bool(self.consistent)).lower(),
        ]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.CSV_FIELDS)
        w.writerow(self.csv_record())
        return buf.getvalue()

    def to_text(self) -> str:
        lines = [f"{self.kind}"]
        c = self.certificate
        if c is not None:
            lines += [
                f"  certificate value   {c.value: .12g}",
                f"  error bound         {c.err: .3g}",
                f"  verdict             {c.verdict}",
                f"  A part              {c.breakdown[0]: .12g}",
                f"  B part              {c.breakdown[1]: .12g}",
                f"  C part              {c.breakdown[2]: .12g}",
            ]
        s = self.sweep
        if s is not None:
            lines.append(f"  sweep               {s.with_zero}/{s.n} {s.label}" + (" (refined)" if s.refined else ""))
            if s.n - s.with_zero:
                lines.append(f"  zero-free angles    {', '.join(f'{t:.8f}' for t in s.zero_free_thetas[:8])}")
        if self.exceptional is not None:
            lines.append(f"  exceptional multiple {'yes' if self.exceptional else 'no'} (residual {self.exceptional_residual:.3g})")
        width = max([19, *(len(k) for k in self.details)])
        for key, val in self.details.items():
            lines.append(f"  {key:<{width}} {val}")
        lines.append(f"  consistent          {'yes' if self.consistent else 'NO'}")
        lines.extend(f"  note: {n}" for n in self.notes)
        return "\n".join(lines)


def _exceptional_residual(prob: ComparisonProblem, tilde_u: Solution, tol: float) -> float:
    """Relative distance between ``ut e^F`` and the target solution with its data at an interior point."""
    phi, dphi = gauged_function(prob, tilde_u)
    c = prob.target
    x_m = _interior_point(c)
    u0 = float(phi(x_m))
    v0 = float(c.p(x_m) * (dphi(x_m) + c.s(x_m) * u0))
    sol = solve_ivp(c, x_m, u0, v0, tol=tol, allow_trivial=True)
    xs = _sample_grid(c, 201)
    ref = phi(xs)
    return float(np.max(np.abs(sol.u(xs) - ref)) / max(np.max(np.abs(ref)), 1e-300))


def compare(
    prob: ComparisonProblem,
    tilde_u: Solution,
    sweep_n: int = 64,
    tol: float = DEFAULT_TOL,
    kind: str = "comparison",
    certificate: Certificate | None = None,
) -> Report:
    """Certificate plus numerical evidence from a sweep over target solutions.

    A strictly negative certificate must come with every swept solution
    vanishing in ``(a, b)``; a violation is reported as an inconsistency.  In
    the weak case the report records whether ``ut e^F`` itself solves the
    target equation (the admissible exception).  Otherwise the sweep is
    refined in search of a zero-free solution.  A precomputed
    ``certificate`` (for instance a Stieltjes evaluation) replaces the
    quadrature one.
    """
    abc_coefficients(prob)
    cert = certificate if certificate is not None else evaluate_con(prob, tilde_u, tol)
    report = Report(kind, cert)
    strict = cert.verdict is Verdict.STRICTLY_NEGATIVE
    weak = cert.verdict is Verdict.WEAK_NONPOSITIVE
    if sweep_n:
        report.sweep = sweep_target(prob.target, sweep_n, tol, refine=not (strict or weak))
    if weak:
        res = _exceptional_residual(prob, tilde_u, tol)
        report.exceptional_residual = res
        report.exceptional = res <= max(1e-6, 1e4 * tol)
    if report.sweep is not None and report.sweep.with_zero < report.sweep.n:
        if strict:
            report.consistent = False
            report.notes.append("numerical inconsistency: a swept target solution has no zero despite a negative certificate")
        elif weak:
            # only multiples of ut e^F may avoid zeros
            report.consistent = bool(report.exceptional) and _zero_free_are_multiples(prob, tilde_u, report.sweep, tol)
            if not report.consistent:
                report.notes.append("zero-free target solution that is not a multiple of ut e^F")
    return report


def _zero_free_are_multiples(prob, tilde_u, sweep, tol) -> bool:
    phi, dphi = gauged_function(prob, tilde_u)
    c = prob.target
    x0 = sweep.x0
    xs = _sample_grid(c, 101)
    ref = phi(xs)
    sols = solutions_at_angles(c, x0, sweep.zero_free_thetas, tol)
    for s in sols:
        u = s.u(xs)
        k = float(np.dot(u, ref) / np.dot(ref, ref))
        if np.max(np.abs(u - k * ref)) > 1e-6 * max(np.max(np.abs(u)), 1e-300):
            return False
    return True


# -- Stieltjes integrals against piecewise smooth integrators ---------------------


def _cheb_derivative(fn, lo, hi, max_deg=1024):
    probe = fn(lo + (hi - lo) * np.linspace(0.01, 0.99, 33))
    if np.ptp(probe) == 0:
        return None  # constant piece
    deg = 16
    while True:
        cheb = Chebyshev.interpolate(fn, deg, domain=[lo, hi])
        coef = np.abs(cheb.coef)
        scale = max(float(coef.max()), 1e-300)
        if float(coef[-3:].max()) <= 1e-14 * scale:
            return cheb.deriv()
        if deg >= max_deg:
            raise ValueError(f"integrator is not resolved on [{lo:g}, {hi:g}]; it must be finite and piecewise smooth")
        deg *= 2


def stieltjes_integral(
    h: Callable,
    mu: Callable,
    a: float,
    b: float,
    breakpoints=(),
    mu_left: Callable | None = None,
    jumps: dict[float, float] | None = None,
    tol: float = DEFAULT_TOL,
) -> tuple[float, float]:
    """``int_[a,b) h dmu`` for ``mu`` smooth between breakpoints.

    The absolutely continuous part uses a Chebyshev derivative of ``mu`` on
    each piece; jumps at interior breakpoints contribute ``h(x) (mu(x+) -
    mu(x-))``.  Jump sizes listed in ``jumps`` are used verbatim, the others
    come from ``mu`` and ``mu_left``.  Returns ``(value, err)``.
    """
    bps = sorted(float(t) for t in np.union1d(np.asarray(breakpoints, dtype=float), list((jumps or {}).keys())) if a < t < b)
    edges = [a, *bps, b]
    total, err = 0.0, 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        dmu = _cheb_derivative(lambda x: np.asarray(mu(x), dtype=float), lo, hi)
        if dmu is None:
            continue
        val, e = integrate(lambda x: h(x) * dmu(x), lo, hi, atol=tol, rtol=0.0)
        total += val
        err += e
    for t in bps:
        if jumps and t in jumps:
            size = jumps[t]
        elif mu_left is not None:
            size = float(mu(np.array(t)) - mu_left(np.array(t)))
        else:
            size = 0.0
        total += float(h(np.array(t))) * size
    return total, err


# -- drivers -------------------------------------------------------------------------


def _samples_with_sides(c_list, n=401):
    a, b = c_list[0].a, c_list[0].b
    edges = np.unique(np.concatenate([c.edges for c in c_list]))
    xs = np.union1d(np.linspace(a, b, n), edges)
    for lo, hi in zip(edges[:-1], edges[1:]):
        t = 0.5 * (np.polynomial.legendre.leggauss(32)[0] + 1.0)
        xs = np.union1d(xs, lo + (hi - lo) * t)
    sing = tuple(any(c.singular[i] for c in c_list) for i in (0, 1))
    if sing[0]:
        xs = xs[xs > a]
    if sing[1]:
        xs = xs[xs < b]
    return xs, edges[1:-1]


def _ordered_values(fn_right, fn_left, xs, bps):
    """Values along ``xs`` with left limits inserted just before each breakpoint."""
    pts, vals = [], []
    bp_set = set(bps.tolist())
    for x in xs:
        if x in bp_set:
            pts.append(x)
            vals.append(float(fn_left(np.array(x))))
        pts.append(x)
        vals.append(float(fn_right(np.array(x))))
    return np.array(pts), np.array(vals)


def sturm_picone(
    tilde: CoefficientSet,
    target: CoefficientSet,
    tilde_u: Solution,
    tol: float = DEFAULT_TOL,
    sweep_n: int = 64,
) -> Report:
    """Generalised Sturm-Picone comparison for ``r = s`` and ``rt = st``.

    Hypotheses ``0 < p <= pt``, ``q <= qt`` and ``mu = pt (s - st) e^(-2S)``
    non-decreasing are checked on quadrature samples and at breakpoints
    (raising :class:`HypothesisError` with a witness).  The certificate uses
    ``G = 2F = 2 St - 2 S``; its ``B`` part is cross-checked against
    ``-int vt^2 dmu`` with ``vt = ut e^St``.
    """
    xs, bps = _samples_with_sides([tilde, target])
    for name, c in (("target", target), ("tilde", tilde)):
        diff = np.abs(c.r(xs) - c.s(xs))
        if np.any(diff > 0):
            raise HypothesisError(f"{name} equation needs r = s", float(xs[np.argmax(diff > 0)]))
    for label, lhs, rhs in (("p <= pt", target.p, tilde.p), ("q <= qt", target.q, tilde.q)):
        for side in ("right", "left"):
            lv = lhs(xs) if side == "right" else lhs.left_limit(xs)
            rv = rhs(xs) if side == "right" else rhs.left_limit(xs)
            bad = np.flatnonzero(lv > rv + tol * np.maximum(1.0, np.abs(rv)))
            if bad.size:
                raise HypothesisError(f"hypothesis {label} fails", float(xs[bad[0]]))
    if np.any(target.p(xs) <= 0):
        raise HypothesisError("hypothesis p > 0 fails", float(xs[np.argmax(target.p(xs) <= 0)]))

    def mu(x):
        return tilde.p(x) * (target.s(x) - tilde.s(x)) * np.exp(-2 * target.S(x))

    def mu_left(x):
        return tilde.p.left_limit(x) * (target.s.left_limit(x) - tilde.s.left_limit(x)) * np.exp(-2 * target.S(x))

    pts, mvals = _ordered_values(mu, mu_left, xs, bps)
    drops = np.diff(mvals)
    bad = np.flatnonzero(drops < -tol * np.maximum(1.0, np.abs(mvals[:-1])))
    if bad.size:
        raise HypothesisError("mu = pt (s - st) exp(-2S) is not non-decreasing", float(pts[bad[0] + 1]))

    a, b = tilde.a, tilde.b
    F = GaugeFunction(tilde.s - target.s)
    G = GaugeFunction(2 * (tilde.s - target.s))
    prob = ComparisonProblem(tilde, target, F, G)
    report = compare(prob, tilde_u, sweep_n, tol, kind="sturm-picone")

    def vt_sq(x):
        return (tilde_u.u(x) * np.exp(tilde.S(x))) ** 2

    stj, stj_err = stieltjes_integral(vt_sq, mu, a, b, bps, mu_left=mu_left, tol=tol)
    b_part = report.certificate.breakdown[1]
    mismatch = abs(b_part + stj)
    report.details["B part - (-int vt^2 dmu)"] = f"{b_part + stj:.3e}"
    allowed = 10 * (report.certificate.breakdown_err[1] + stj_err) + 1e3 * max(tol, tilde_u.accuracy) * max(1.0, abs(stj))
    if mismatch > allowed:
        report.consistent = False
        report.notes.append(f"B part disagrees with the Stieltjes form by {mismatch:.3e}")
    return report


def separation(c: CoefficientSet, tilde_u: Solution, u: Solution, tol: float = DEFAULT_TOL) -> Report:
    """Separation: ``u`` vanishes in ``(a, b)`` unless it is a multiple of ``tilde_u``.

    Uses ``F = 0``, ``G = S - R`` for which ``A = B = C = 0``; dependence is
    tested through the weighted Wronskian.
    """
    if not u.coeffs.same_as(c):
        raise ValueError("u must solve the same equation")
    G = GaugeFunction(c.s - c.r)
    prob = ComparisonProblem(c, c, GaugeFunction.zero(c.a, c.b), G)
    cert = evaluate_con(prob, tilde_u, tol)
    zeros = find_zeros(u, tol=tol)
    xs = _sample_grid(c, 101)
    s1, s2 = tilde_u.state(xs), u.state(xs)
    w = (s1[:, 0] * s2[:, 1] - s2[:, 0] * s1[:, 1]) * np.exp(c.S(xs) - c.R(xs))
    norm = float(np.max(np.linalg.norm(s1, axis=1)) * np.max(np.linalg.norm(s2, axis=1)))
    rel_w = float(np.max(np.abs(w)) / norm)
    dependent = rel_w <= 1e3 * max(tol, tilde_u.accuracy, u.accuracy)
    report = Report("separation", cert)
    report.exceptional = dependent
    report.exceptional_residual = rel_w
    report.details["zeros of u"] = ", ".join(f"{z.x:.10g}" for z in zeros) or "none"
    report.consistent = bool(len(zeros) or dependent)
    if not report.consistent:
        report.notes.append("independent solution without a zero between the zeros of the tilde solution")
    return report
