"""Jacobi difference equations and their embedding into piecewise-constant
continuous problems.

The recurrence is written in forward-difference form

    -alpha_n (u_{n+1} - u_n) + alpha_{n-1} (u_n - u_{n-1}) + v_n u_n = 0,

for ``N0 + 1 <= n <= N1 - 1`` with ``alpha`` positive on ``[N0, N1 - 1]``.
The three-term form ``alpha_{n-1} u_{n-1} + beta_n u_n + alpha_n u_{n+1} = 0``
corresponds to ``v_n = -beta_n - alpha_n - alpha_{n-1}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .coeffs import CoefficientSet, PiecewiseFunction
from .comparison import (
    Certificate,
    ComparisonProblem,
    HypothesisError,
    Report,
    SweepSummary,
    classify,
    evaluate_con,
)
from .expr import Num
from .solver import Solution, solve_ivp

__all__ = [
    "JacobiProblem",
    "JacobiSolution",
    "solve_recurrence",
    "changes_sign",
    "sign_changes",
    "dcon_value",
    "embed",
    "crossing_point",
    "embedded_solution",
    "critical_angles",
    "discrete_sweep",
    "discrete_compare",
]

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class JacobiProblem:
    """``alpha`` indexed ``N0..N1-1`` and ``v`` indexed ``N0+1..N1-1``."""

    N0: int
    N1: int
    alpha: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        alpha = np.asarray(self.alpha, dtype=float)
        v = np.asarray(self.v, dtype=float)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "v", v)
        if self.N1 - self.N0 < 2:
            raise ValueError(f"need N1 - N0 >= 2, got N0={self.N0}, N1={self.N1}")
        if alpha.shape != (self.N1 - self.N0,):
            raise ValueError(f"alpha needs {self.N1 - self.N0} entries (indices {self.N0}..{self.N1 - 1}), got {alpha.size}")
        if v.shape != (self.N1 - self.N0 - 1,):
            raise ValueError(f"v needs {self.N1 - self.N0 - 1} entries (indices {self.N0 + 1}..{self.N1 - 1}), got {v.size}")
        bad = np.flatnonzero(~(alpha > 0) | ~np.isfinite(alpha))
        if bad.size:
            n = self.N0 + int(bad[0])
            raise ValueError(f"alpha must be positive and finite; alpha[{n}] = {float(alpha[bad[0]])!r}")
        bad = np.flatnonzero(~np.isfinite(v))
        if bad.size:
            raise ValueError(f"v must be finite; v[{self.N0 + 1 + int(bad[0])}] = {float(v[bad[0]])!r}")

    @classmethod
    def from_beta(cls, N0: int, N1: int, alpha, beta) -> "JacobiProblem":
        """From the three-term coefficients, ``beta`` indexed ``N0+1..N1-1``."""
        alpha = np.asarray(alpha, dtype=float)
        beta = np.asarray(beta, dtype=float)
        if beta.shape != (N1 - N0 - 1,):
            raise ValueError(f"beta needs {N1 - N0 - 1} entries (indices {N0 + 1}..{N1 - 1}), got {beta.size}")
        return cls(N0, N1, alpha, -beta - alpha[1:] - alpha[:-1])

    def a(self, n: int) -> float:
        return float(self.alpha[n - self.N0])

    def vv(self, n: int) -> float:
        return float(self.v[n - self.N0 - 1])

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.N0, self.N1 + 1)

    def same_range(self, other: "JacobiProblem") -> bool:
        return (self.N0, self.N1) == (other.N0, other.N1)

    def residual(self, u) -> np.ndarray:
        """Recurrence residuals at ``n = N0+1..N1-1``."""
        u = np.asarray(u, dtype=float)
        al = self.alpha
        return -al[1:] * (u[2:] - u[1:-1]) + al[:-1] * (u[1:-1] - u[:-2]) + self.v * u[1:-1]


@dataclass(frozen=True)
class JacobiSolution:
    problem: JacobiProblem
    u: np.ndarray = field(repr=False)

    @property
    def indices(self) -> np.ndarray:
        return self.problem.indices

    def __getitem__(self, n: int) -> float:
        return float(self.u[n - self.problem.N0])

    def to_rows(self):
        return [(int(n), float(x)) for n, x in zip(self.indices, self.u)]


def solve_recurrence(p: JacobiProblem, u_N0: float, u_N0plus1: float) -> JacobiSolution:
    """Forward recursion from ``(u_N0, u_{N0+1})``.

    >>> p = JacobiProblem(0, 4, [1, 1, 1, 1], [-2, -2, -2])
    >>> solve_recurrence(p, 0.0, 1.0).u.tolist()
    [0.0, 1.0, 0.0, -1.0, 0.0]
    """
    if u_N0 == 0 and u_N0plus1 == 0:
        raise ValueError("initial values (0, 0) give the trivial solution")
    m = p.N1 - p.N0
    u = np.empty(m + 1)
    u[0], u[1] = u_N0, u_N0plus1
    al = p.alpha
    for k in range(1, m):
        # alpha_k u_{k+1} = alpha_k u_k + alpha_{k-1} (u_k - u_{k-1}) + v_k u_k
        u[k + 1] = u[k] + (al[k - 1] * (u[k] - u[k - 1]) + p.v[k - 1] * u[k]) / al[k]
    return JacobiSolution(p, u)


def changes_sign(u, zero_tol: float = 0.0) -> bool:
    """True when some ``u_n u_m < 0``.

    Entries with ``|u_n| <= zero_tol * max|u|`` count as zero, which keeps
    rounding noise at an exact zero from faking a sign change.
    """
    u = np.asarray(getattr(u, "u", u), dtype=float)
    scale = float(np.max(np.abs(u))) if u.size else 0.0
    keep = u[np.abs(u) > zero_tol * scale]
    return bool(np.any(keep > 0) and np.any(keep < 0))


def sign_changes(u, zero_tol: float = 0.0) -> int:
    """Number of sign flips along the sequence, ignoring (near-)zero entries."""
    u = np.asarray(getattr(u, "u", u), dtype=float)
    scale = float(np.max(np.abs(u))) if u.size else 0.0
    keep = np.sign(u[np.abs(u) > zero_tol * scale])
    return int(np.sum(keep[1:] != keep[:-1]))


def _check_tilde(tilde: JacobiProblem, tilde_u: JacobiSolution):
    u = tilde_u.u
    if not np.any(u != 0):
        raise HypothesisError("the tilde solution is trivial")
    if u[0] != 0:
        raise HypothesisError(f"tilde solution must vanish at N0 = {tilde.N0}; u = {u[0]!r}")
    if u[-2] * u[-1] > 0:
        raise HypothesisError(
            f"tilde solution needs u[{tilde.N1 - 1}] * u[{tilde.N1}] <= 0; got {u[-2]!r} * {u[-1]!r}"
        )
    res = tilde.residual(u)
    scale = float(np.max(np.abs(u)) * (np.max(tilde.alpha) + np.max(np.abs(tilde.v))))
    bad = np.flatnonzero(np.abs(res) > 1e-9 * scale)
    if bad.size:
        raise HypothesisError(f"supplied sequence violates the tilde recurrence at n = {tilde.N0 + 1 + int(bad[0])}")


def _dcon_terms(tilde: JacobiProblem, target: JacobiProblem, u: np.ndarray) -> np.ndarray:
    da = target.alpha - tilde.alpha
    dv = target.v - tilde.v
    terms = da[:-1] * (u[1:-1] - u[:-2]) ** 2 + dv * u[1:-1] ** 2
    boundary = da[-1] * (u[-2] ** 2 - u[-2] * u[-1])
    return np.append(terms, boundary)


def dcon_value(tilde: JacobiProblem, target: JacobiProblem, tilde_u: JacobiSolution) -> float:
    """The discrete certificate: summed difference terms plus the boundary term.

    >>> t = JacobiProblem(0, 4, [1, 1, 1, 1], [-2, -2, -2])
    >>> g = JacobiProblem(0, 4, [1, 1, 1, 1], [-3, -3, -3])
    >>> dcon_value(t, g, solve_recurrence(t, 0.0, 1.0))
    -2.0
    """
    if not tilde.same_range(target):
        raise ValueError("tilde and target must share N0 and N1")
    _check_tilde(tilde, tilde_u)
    return float(np.sum(_dcon_terms(tilde, target, tilde_u.u)))


# -- embedding ------------------------------------------------------------------


def crossing_point(tilde_u: JacobiSolution) -> float:
    """Where the last linear segment of the interpolant meets the axis."""
    p = tilde_u.problem
    u1, u2 = tilde_u.u[-2], tilde_u.u[-1]
    if u1 == 0:
        return float(p.N1 - 1)
    if u2 == 0:
        return float(p.N1)
    if u1 * u2 > 0:
        raise HypothesisError(f"u[{p.N1 - 1}] * u[{p.N1}] > 0: the last segment does not cross the axis")
    return (p.N1 - 1) + u1 / (u1 - u2)


def embed(p: JacobiProblem, tilde_u: JacobiSolution | None = None, b: float | None = None) -> tuple[CoefficientSet, float]:
    """Piecewise-constant coefficients reproducing the recurrence.

    On ``[n, n+1)``: ``p = alpha_n``, ``s = r = -sum_{k=N0+1}^n v_k / alpha_n``
    (zero on the first unit) and ``q = -p s^2``.  The right end is the axis
    crossing of ``tilde_u`` when given, else ``b`` or ``N1``.
    """
    if tilde_u is not None:
        b = crossing_point(tilde_u)
    elif b is None:
        b = float(p.N1)
    if not (p.N0 < b <= p.N1):
        raise ValueError(f"embedding end {b} outside ({p.N0}, {p.N1}]")
    last = min(int(math.ceil(b)) - 1, p.N1 - 1)
    cum = np.concatenate([[0.0], np.cumsum(p.v)])  # cum[k] = sum_{N0+1}^{N0+k} v
    ps, ss, qs = [], [], []
    for k in range(last - p.N0 + 1):
        al = float(p.alpha[k])
        sv = -cum[k] / al
        ps.append(Num(al))
        ss.append(Num(sv))
        qs.append(Num(-al * sv * sv))
    bps = [float(n) for n in range(p.N0 + 1, last + 1)]
    a = float(p.N0)
    P = PiecewiseFunction(a, b, ps, bps)
    S = PiecewiseFunction(a, b, ss, bps)
    Q = PiecewiseFunction(a, b, qs, bps)
    return CoefficientSet(P, Q, S, S), b


def embedded_solution(c: CoefficientSet, p: JacobiProblem, u_N0: float, u_N0plus1: float, tol: float = 1e-12) -> Solution:
    """Continuous solution through the given first two values; ``v(N0) = alpha_N0 (u_{N0+1} - u_N0)``."""
    return solve_ivp(c, float(p.N0), u_N0, float(p.alpha[0]) * (u_N0plus1 - u_N0), tol=tol)


# -- sweeps and the driver ----------------------------------------------------------


def critical_angles(p: JacobiProblem) -> np.ndarray:
    """Angles in ``[0, pi)`` where some ``u_n`` of the ``(cos t, sin t)`` solution vanishes.

    Every ``u_n`` is ``c_n cos t + d_n sin t``, so the sign pattern is
    constant between consecutive critical angles.
    """
    c = solve_recurrence(p, 1.0, 0.0).u
    d = solve_recurrence(p, 0.0, 1.0).u
    t = np.mod(np.arctan2(-c, d), math.pi)
    return np.unique(t[(c != 0) | (d != 0)])


def discrete_sweep(p: JacobiProblem, n: int = 0, zero_tol: float = 1e-12) -> SweepSummary:
    """Sign-change counts over initial directions ``(u_N0, u_{N0+1}) = (cos t, sin t)``.

    The angles are every critical angle, the midpoints between them and ``n``
    equally spaced extras, which covers each sign pattern that occurs.
    """
    crit = critical_angles(p)
    ext = np.concatenate([crit, [crit[0] + math.pi]])
    mids = 0.5 * (ext[:-1] + ext[1:])
    extra = np.arange(n) * math.pi / n if n else np.empty(0)
    thetas = np.unique(np.mod(np.concatenate([crit, mids, extra]), math.pi))
    c = solve_recurrence(p, 1.0, 0.0).u
    d = solve_recurrence(p, 0.0, 1.0).u
    counts = np.array([sign_changes(math.cos(t) * c + math.sin(t) * d, zero_tol) for t in thetas])
    return SweepSummary(float(p.N0), thetas, counts, label=f"solutions change sign on [{p.N0}, {p.N1}]")


def discrete_compare(
    tilde: JacobiProblem,
    target: JacobiProblem,
    tilde_u: JacobiSolution,
    sweep_n: int = 64,
    tol: float = 1e-12,
) -> Report:
    """Discrete comparison with sweep evidence and the continuous cross-check.

    The certificate is checked against the continuous certificate of the
    embedded problems on ``[N0, b]`` with ``F = G = 0``; sign changes are
    checked on the full index range.
    """
    value = dcon_value(tilde, target, tilde_u)
    terms = _dcon_terms(tilde, target, tilde_u.u)
    err = 16 * _EPS * float(np.sum(np.abs(terms)) + np.max(np.abs(tilde_u.u)) ** 2)
    cert = Certificate(value, err, classify(value, err), (value, 0.0, 0.0))
    report = Report("jacobi", cert)
    report.sweep = discrete_sweep(target, sweep_n)

    c_tilde, b = embed(tilde, tilde_u)
    c_target, _ = embed(target, b=b)
    u_cont = embedded_solution(c_tilde, tilde, tilde_u.u[0], tilde_u.u[1])
    cont = evaluate_con(ComparisonProblem.plain(c_tilde, c_target), u_cont, tol=tol)
    diff = value - cont.value
    report.details["embedding end b"] = f"{b:.12g}"
    report.details["continuous certificate"] = f"{cont.value:.15g}"
    report.details["difference"] = f"{diff:.3e}"
    if abs(diff) > 1e-8 * max(1.0, abs(value)):
        report.consistent = False
        report.notes.append(f"discrete and continuous certificates differ by {diff:.3e}")

    strict = cert.verdict.value == "StrictlyNegative"
    weak = cert.verdict.value == "WeakNonpositive"
    if weak:
        res = target.residual(tilde_u.u)
        scale = float(np.max(np.abs(tilde_u.u)) * (np.max(target.alpha) + np.max(np.abs(target.v))))
        report.exceptional_residual = float(np.max(np.abs(res)) / scale)
        report.exceptional = report.exceptional_residual <= 1e-12
    free = report.sweep.zero_free_thetas
    if free.size and (strict or weak):
        c = solve_recurrence(target, 1.0, 0.0).u
        d = solve_recurrence(target, 0.0, 1.0).u
        ref = tilde_u.u
        ok = not strict
        for t in free if ok else ():
            u = math.cos(t) * c + math.sin(t) * d
            k = float(np.dot(u, ref) / np.dot(ref, ref))
            if np.max(np.abs(u - k * ref)) > 1e-9 * np.max(np.abs(u)):
                ok = False
        if not ok:
            report.consistent = False
            report.notes.append("a target solution keeps its sign although the certificate excludes it")
    return report
