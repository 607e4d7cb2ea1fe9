"""Schrödinger equations ``-u'' + v u = 0`` whose potential ``v`` is a
distribution with a square-integrable antiderivative ``V``.

Such an equation is the general equation with ``p = 1``, ``q = -V^2`` and
``r = s = -V``; its quasi-derivative is ``u' - V u``.  Point masses of
``v`` are jumps of ``V`` and are kept in an explicit jump list.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .coeffs import CoefficientSet, PiecewiseFunction
from .comparison import (
    Certificate,
    ComparisonProblem,
    HypothesisError,
    Report,
    classify,
    compare,
    evaluate_con,
    stieltjes_integral,
)
from .expr import Call, Num, Var
from .quadrature import QuadratureError, integrate
from .solver import DEFAULT_TOL, Solution

__all__ = [
    "PotentialAntiderivative",
    "MeasureCheck",
    "build_coefficients",
    "measure_nonneg",
    "jump_residuals",
    "distributional_compare",
]

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class PotentialAntiderivative:
    """``V`` with its jumps; ``jumps`` maps position to ``V(x+) - V(x-)``.

    Use :meth:`from_parts` to build ``V`` from an absolutely continuous part
    plus point masses.
    """

    V: PiecewiseFunction
    jumps: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        V = self.V
        found = {}
        for t in V.breakpoints:
            w = float(V(np.array(t)) - V.left_limit(np.array(t)))
            if w != 0.0:
                found[float(t)] = w
        given = dict(self.jumps)
        for x, w in given.items():
            if not (V.a < x < V.b):
                raise ValueError(f"jump at {x} is outside ({V.a}, {V.b})")
            have = found.get(x, 0.0)
            if abs(have - w) > 1e-12 * max(1.0, abs(w)):
                raise ValueError(f"jump at {x}: listed weight {w} but V jumps by {have}")
        for x, w in found.items():
            given.setdefault(x, w)
        object.__setattr__(self, "jumps", tuple(sorted(given.items())))
        try:
            integrate(lambda x: V(x) ** 2, V.a, V.b, breakpoints=V.breakpoints, singular=V.singular, atol=1e-9, rtol=1e-9)
        except QuadratureError as exc:
            raise ValueError(f"V is not square-integrable: {exc}") from exc

    @classmethod
    def from_parts(cls, a: float, b: float, ac, jumps: Sequence[tuple[float, float]] = (), params=None, breakpoints=()):
        """``V = ac + sum w step(x - at)``; ``ac`` is an expression string or a :class:`PiecewiseFunction`."""
        if not isinstance(ac, PiecewiseFunction):
            ac = PiecewiseFunction.parse(a, b, ac, params, breakpoints)
        V = ac
        for at, w in jumps:
            V = V + PiecewiseFunction(a, b, [Num(float(w)) * Call("step", Var() - Num(float(at)))])
        return cls(V, tuple((float(at), float(w)) for at, w in jumps))

    @property
    def a(self):
        return self.V.a

    @property
    def b(self):
        return self.V.b

    def jump_map(self) -> dict[float, float]:
        return dict(self.jumps)


def build_coefficients(V: PotentialAntiderivative, tol: float = DEFAULT_TOL) -> CoefficientSet:
    """``(p, q, r, s) = (1, -V^2, -V, -V)``."""
    f = V.V
    one = PiecewiseFunction.constant(f.a, f.b, 1.0, f.singular)
    return CoefficientSet(one, -(f * f), -f, -f, tol)


class MeasureCheck(NamedTuple):
    ok: bool
    witness: float | None

    def __bool__(self):
        return self.ok


def measure_nonneg(tildeV: PotentialAntiderivative, V: PotentialAntiderivative, samples: int = 257, tol: float = 1e-12) -> MeasureCheck:
    """Is ``mu = Vt - V`` non-decreasing?  Returns the first violating point otherwise.

    Checked at ``samples`` points per smooth piece and at every breakpoint,
    where the jump of ``mu`` must be non-negative.
    """
    if (tildeV.a, tildeV.b) != (V.a, V.b):
        raise ValueError("potentials live on different intervals")
    mu = tildeV.V - V.V
    edges = mu.edges
    for lo, hi in zip(edges[:-1], edges[1:]):
        xs = np.linspace(lo, hi, samples)
        vals = np.concatenate([mu(xs[:-1]), mu.left_limit(xs[-1:])])
        if mu.singular[0] and lo == mu.a:
            xs, vals = xs[1:], vals[1:]
        if mu.singular[1] and hi == mu.b:
            xs, vals = xs[:-1], vals[:-1]
        drop = np.flatnonzero(np.diff(vals) < -tol * np.maximum(1.0, np.abs(vals[:-1])))
        if drop.size:
            return MeasureCheck(False, float(xs[drop[0] + 1]))
    for t in mu.breakpoints:
        if float(mu(np.array(t)) - mu.left_limit(np.array(t))) < -tol:
            return MeasureCheck(False, float(t))
    return MeasureCheck(True, None)


def jump_residuals(V: PotentialAntiderivative, sol: Solution) -> list[tuple[float, float]]:
    """``|u'(c+) - u'(c-) - w u(c)|`` at each point mass ``w delta_c``.

    ``u'`` is read off the quasi-derivative as ``v + V u`` on either side.
    """
    out = []
    for c, w in V.jumps:
        x = np.array(c)
        u, qd = sol.u(x), sol.v(x)
        right = qd + V.V(x) * u
        left = qd + V.V.left_limit(x) * u
        out.append((c, float(abs(right - left - w * u))))
    return out


def distributional_compare(
    tildeV: PotentialAntiderivative,
    V: PotentialAntiderivative,
    tilde_u: Solution,
    tol: float = DEFAULT_TOL,
    sweep_n: int = 64,
) -> Report:
    """Comparison for distributional potentials with ``F = G = 0``.

    The certificate is ``-int ut^2 dmu`` with ``mu = Vt - V``: point masses
    are summed exactly and the absolutely continuous part is integrated.
    It is cross-checked against the quadrature certificate of the built
    coefficient sets.
    """
    check = measure_nonneg(tildeV, V)
    if not check:
        raise HypothesisError("vt - v is not a non-negative measure", check.witness)
    c_tilde = build_coefficients(tildeV, tol)
    c_target = build_coefficients(V, tol)
    if not tilde_u.coeffs.same_as(c_tilde):
        raise ValueError("tilde_u must solve the equation built from tildeV")
    prob = ComparisonProblem.plain(c_tilde, c_target)
    quad = evaluate_con(prob, tilde_u, tol)

    mu = tildeV.V - V.V
    weights = tildeV.jump_map()
    for x, w in V.jumps:
        weights[x] = weights.get(x, 0.0) - w
    stj, stj_err = stieltjes_integral(
        lambda x: tilde_u.u(x) ** 2, mu, mu.a, mu.b, mu.breakpoints, mu_left=mu.left_limit, jumps=weights, tol=tol
    )
    value = 0.0 - stj
    # mu is non-decreasing, so its total variation is mu(b-) - mu(a)
    xs_end = np.array([mu.a + 1e-9 * (mu.b - mu.a), mu.b - 1e-9 * (mu.b - mu.a)]) if any(mu.singular) else np.array([mu.a, mu.b])
    mass = max(sum(abs(w) for w in weights.values()), float(mu.left_limit(xs_end[1]) - mu(xs_end[0])))
    scale = float(np.max(np.abs(tilde_u.u(np.linspace(mu.a, mu.b, 201))))) ** 2
    err = stj_err + 2 * tilde_u.accuracy * mass * np.sqrt(scale) + 16 * _EPS * mass * scale
    cert = Certificate(value, float(err), classify(value, float(err)), quad.breakdown, quad.breakdown_err)
    report = compare(prob, tilde_u, sweep_n, tol, kind="distributional", certificate=cert)
    diff = value - quad.value
    report.details["quadrature certificate"] = f"{quad.value:.15g}"
    report.details["difference"] = f"{diff:.3e}"
    if abs(diff) > 10 * (err + quad.err):
        report.consistent = False
        report.notes.append(f"Stieltjes and quadrature certificates differ by {diff:.3e}")
    return report
