"""Piecewise coefficient functions, their antiderivatives, and the
coefficient quadruple ``(p, q, r, s)`` of

    -(p (u' + s u))' + r p (u' + s u) + q u = 0.
"""

from __future__ import annotations

import math
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import brentq

from .expr import BinOp, Call, Expr, Neg, Num, as_expr, parse_expr
from .quadrature import (
    DEFAULT_ATOL,
    DEFAULT_RTOL,
    PLAIN,
    SING_HI,
    SING_LO,
    QuadratureError,
    adapt,
    integrate,
    panel_integral,
)

__all__ = [
    "PiecewiseFunction",
    "Antiderivative",
    "CoefficientSet",
    "GaugeFunction",
    "CoefficientError",
    "antiderivative",
    "integrate_piecewise",
    "coefficient_set",
]

_STEP_SCAN = 2048


class CoefficientError(ValueError):
    """Coefficients violate integrability or positivity requirements."""


def _step_switches(expr: Expr, lo: float, hi: float) -> list[float]:
    """Points in ``(lo, hi)`` where the argument of some ``step`` changes sign."""
    found = []
    xs = np.linspace(lo, hi, _STEP_SCAN + 1)
    for arg in expr.step_arguments():
        if not arg.depends_on_x():
            continue
        with np.errstate(all="ignore"):
            vals = arg(xs)
        on = vals >= 0
        for i in np.flatnonzero(on[1:] != on[:-1]):
            if vals[i] == 0.0:
                root = xs[i]
            elif vals[i + 1] == 0.0:
                root = xs[i + 1]
            else:
                root = brentq(lambda t: float(arg(t)), xs[i], xs[i + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps)
            if lo + 1e-13 * (hi - lo) < root < hi - 1e-13 * (hi - lo):
                found.append(float(root))
    return found


def _freeze_steps(expr: Expr, x_mid: float) -> Expr:
    """Replace each ``step`` call by its constant value near ``x_mid``."""
    if isinstance(expr, Call):
        arg = _freeze_steps(expr.arg, x_mid)
        if expr.name == "step":
            return Num(float(arg(np.array(x_mid)) >= 0))
        return Call(expr.name, arg)
    if isinstance(expr, BinOp):
        return BinOp(expr.op, _freeze_steps(expr.left, x_mid), _freeze_steps(expr.right, x_mid))
    if isinstance(expr, Neg):
        return Neg(_freeze_steps(expr.operand, x_mid))
    return expr


class PiecewiseFunction:
    """A real function on ``[a, b]`` given by one expression per subinterval.

    Evaluation is right-continuous: at a breakpoint the piece to its right
    applies (at ``b`` the last piece).  Jumps produced by ``step`` inside a
    piece are located at construction and promoted to breakpoints; the
    stored pieces have every ``step`` replaced by its constant value.
    """

    def __init__(
        self,
        a: float,
        b: float,
        pieces: Sequence[Expr | float] | Expr | float,
        breakpoints: Sequence[float] = (),
        singular: tuple[bool, bool] = (False, False),
    ):
        a, b = float(a), float(b)
        if not (math.isfinite(a) and math.isfinite(b) and a < b):
            raise ValueError(f"invalid interval [{a}, {b}]")
        if isinstance(pieces, (Expr, int, float)):
            pieces = [pieces]
        pieces = [as_expr(p) for p in pieces]
        breakpoints = [float(t) for t in breakpoints]
        if len(pieces) == 1 and breakpoints:
            pieces = pieces * (len(breakpoints) + 1)
        if len(pieces) != len(breakpoints) + 1:
            raise ValueError(f"{len(breakpoints)} breakpoints need {len(breakpoints) + 1} pieces, got {len(pieces)}")
        if any(not (a < t < b) for t in breakpoints):
            raise ValueError("breakpoints must lie strictly inside (a, b)")
        if any(t1 <= t0 for t0, t1 in zip(breakpoints, breakpoints[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        edges = [a, *breakpoints, b]
        out_bp: list[float] = []
        out_pieces: list[Expr] = []
        for k, piece in enumerate(pieces):
            lo, hi = edges[k], edges[k + 1]
            cuts = [lo, *sorted(set(_step_switches(piece, lo, hi))), hi]
            for j in range(len(cuts) - 1):
                out_pieces.append(_freeze_steps(piece, 0.5 * (cuts[j] + cuts[j + 1])))
                if j < len(cuts) - 2:
                    out_bp.append(cuts[j + 1])
            if k < len(breakpoints):
                out_bp.append(breakpoints[k])
        self.a, self.b = a, b
        self.breakpoints = np.array(out_bp, dtype=float)
        self.pieces: tuple[Expr, ...] = tuple(out_pieces)
        self.singular = (bool(singular[0]), bool(singular[1]))

    # -- construction helpers ------------------------------------------------

    @classmethod
    def parse(cls, a, b, text: str | Sequence[str], params: Mapping[str, float] | None = None, breakpoints=(), singular=(False, False)):
        if isinstance(text, str):
            text = [text]
        return cls(a, b, [parse_expr(t, params) for t in text], breakpoints, singular)

    @classmethod
    def constant(cls, a, b, value: float, singular=(False, False)):
        return cls(a, b, [Num(float(value))], (), singular)

    @property
    def edges(self) -> np.ndarray:
        return np.concatenate([[self.a], self.breakpoints, [self.b]])

    def is_constant_on(self, k: int) -> bool:
        return not self.pieces[k].depends_on_x()

    def piece_index(self, x, side: str = "right") -> np.ndarray:
        return np.searchsorted(self.breakpoints, np.asarray(x, dtype=float), side=side)

    def __call__(self, x) -> np.ndarray:
        return self._evaluate(x, "right")

    def left_limit(self, x) -> np.ndarray:
        """Values using the piece to the left of each breakpoint."""
        return self._evaluate(x, "left")

    def _evaluate(self, x, side):
        x = np.asarray(x, dtype=float)
        if len(self.pieces) == 1:
            with np.errstate(all="ignore"):
                return self.pieces[0](x)
        idx = self.piece_index(x, side)
        out = np.empty(x.shape)
        with np.errstate(all="ignore"):
            for k in np.unique(idx):
                mask = idx == k
                out[mask] = self.pieces[k](x[mask])
        return out

    def __repr__(self):
        parts = ", ".join(str(p) for p in self.pieces)
        return f"PiecewiseFunction([{self.a}, {self.b}], breakpoints={self.breakpoints.tolist()}, pieces=[{parts}])"

    # -- algebra -------------------------------------------------------------

    def _combine(self, other, op):
        if not isinstance(other, PiecewiseFunction):
            other = PiecewiseFunction(self.a, self.b, [as_expr(other)])
        if (self.a, self.b) != (other.a, other.b):
            raise ValueError("piecewise functions live on different intervals")
        bps = np.union1d(self.breakpoints, other.breakpoints)
        edges = np.concatenate([[self.a], bps, [self.b]])
        mids = 0.5 * (edges[:-1] + edges[1:])
        pieces = [op(self.pieces[i], other.pieces[j]) for i, j in zip(self.piece_index(mids), other.piece_index(mids))]
        sing = (self.singular[0] or other.singular[0], self.singular[1] or other.singular[1])
        return PiecewiseFunction(self.a, self.b, pieces, bps, sing)

    def __add__(self, other):
        return self._combine(other, lambda u, v: u + v)

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(other, lambda u, v: u - v)

    def __rsub__(self, other):
        return self._combine(other, lambda u, v: v - u)

    def __mul__(self, other):
        return self._combine(other, lambda u, v: u * v)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self._combine(other, lambda u, v: u / v)

    def __neg__(self):
        return PiecewiseFunction(self.a, self.b, [-p for p in self.pieces], self.breakpoints, self.singular)

    def restrict(self, lo: float, hi: float) -> "PiecewiseFunction":
        """The same function on ``[lo, hi]``; singular flags survive only at unchanged ends."""
        lo, hi = float(lo), float(hi)
        if not (self.a <= lo < hi <= self.b):
            raise ValueError(f"[{lo}, {hi}] is not a subinterval of [{self.a}, {self.b}]")
        first = int(self.piece_index(lo, "right"))
        last = int(self.piece_index(hi, "left"))
        bps = [t for t in self.breakpoints if lo < t < hi]
        pieces = list(self.pieces[first : last + 1])
        sing = (self.singular[0] and lo == self.a, self.singular[1] and hi == self.b)
        return PiecewiseFunction(lo, hi, pieces, bps, sing)


def integrate_piecewise(f, a, b, *, breakpoints=(), singular=(False, False), atol=DEFAULT_ATOL, rtol=DEFAULT_RTOL):
    """Integrate a callable (e.g. a combination of piecewise functions) over ``[a, b]``."""
    return integrate(f, a, b, breakpoints=breakpoints, singular=singular, atol=atol, rtol=rtol)


class Antiderivative:
    """Cumulative integral ``x -> int_a^x f`` with a uniform error bound.

    Built from the accepted panels of an adaptive rule; between panel edges a
    fixed Gauss-Legendre rule integrates from the nearest regular edge.
    """

    def __init__(self, f: PiecewiseFunction, tol: float = DEFAULT_ATOL):
        if tol <= 0:
            raise ValueError("tol must be positive")
        self.f = f
        self.a, self.b = f.a, f.b
        edges = f.edges
        los, his, modes, vals = [], [], [], []
        err = 0.0
        n_pieces = len(edges) - 1
        for k in range(n_pieces):
            lo, hi = edges[k], edges[k + 1]
            sing = (f.singular[0] and k == 0, f.singular[1] and k == n_pieces - 1)
            piece_tol = tol * (hi - lo) / (f.b - f.a)
            if f.is_constant_on(k) and not any(sing):
                c = float(f.pieces[k](lo))
                if not math.isfinite(c):
                    raise QuadratureError(f"integrand not finite on [{lo:g}, {hi:g}]")
                p_lo, p_hi, p_mode, p_val = np.array([lo]), np.array([hi]), np.array([PLAIN]), np.array([c * (hi - lo)])
            else:
                piece = f.pieces[k]
                p_lo, p_hi, p_mode, v, e = adapt(piece, [lo, hi], sing, atol=piece_tol, rtol=0.0)
                p_val = v[0]
                err += float(e.sum())
            los.append(p_lo)
            his.append(p_hi)
            modes.append(p_mode)
            vals.append(p_val)
        self._lo = np.concatenate(los)
        self._hi = np.concatenate(his)
        self._mode = np.concatenate(modes)
        self._cum = np.concatenate([[0.0], np.cumsum(np.concatenate(vals))])
        self.error_bound = max(err, 0.0)
        self.tol = tol
        self._piece_of_panel = f.piece_index(0.5 * (self._lo + self._hi))

    @property
    def nodes(self) -> np.ndarray:
        return np.concatenate([self._lo, self._hi[-1:]])

    @property
    def total(self) -> float:
        return float(self._cum[-1])

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        flat = np.clip(x.ravel(), self.a, self.b)
        j = np.clip(np.searchsorted(self._lo, flat, side="right") - 1, 0, len(self._lo) - 1)
        lo, hi, mode = self._lo[j], self._hi[j], self._mode[j]
        out = np.empty(flat.shape)
        from_right = mode == SING_HI
        exact_lo = flat == lo
        exact_hi = flat == hi
        out[exact_lo] = self._cum[j[exact_lo]]
        out[exact_hi] = self._cum[j[exact_hi] + 1]
        rest = ~(exact_lo | exact_hi)
        for right in (False, True):
            sel = rest & (from_right == right)
            if not np.any(sel):
                continue
            jj = j[sel]
            pieces = self._piece_of_panel[jj]
            vals = np.empty(jj.shape)
            for k in np.unique(pieces):
                m = pieces == k
                expr = self.f.pieces[k]
                xq = flat[sel][m]
                if right:
                    part = panel_integral(expr, xq, hi[sel][m], SING_HI)
                    vals[m] = self._cum[jj[m] + 1] - part
                else:
                    part = panel_integral(expr, lo[sel][m], xq, np.where(mode[sel][m] == SING_LO, SING_LO, PLAIN))
                    vals[m] = self._cum[jj[m]] + part
            out[sel] = vals
        return out.reshape(x.shape)


def antiderivative(f: PiecewiseFunction, tol: float = DEFAULT_ATOL) -> Antiderivative:
    """Antiderivative of ``f`` vanishing at ``f.a`` with uniform error <= ``tol``.

    Raises :class:`QuadratureError` when ``f`` is not integrable at the
    requested precision.
    """
    return Antiderivative(f, tol)


class GaugeFunction:
    """An absolutely continuous function given by its derivative and its value at ``a``."""

    def __init__(self, derivative: PiecewiseFunction, value_at_a: float = 0.0, tol: float = DEFAULT_ATOL):
        self.derivative = derivative
        self.value_at_a = float(value_at_a)
        self.a, self.b = derivative.a, derivative.b
        self._anti = Antiderivative(derivative, tol)

    @classmethod
    def zero(cls, a, b):
        return cls(PiecewiseFunction.constant(a, b, 0.0))

    @classmethod
    def linear(cls, a, b, slope: float, value_at_a: float | None = None):
        """``x -> slope * x`` (or with the given value at ``a``)."""
        start = slope * a if value_at_a is None else value_at_a
        return cls(PiecewiseFunction.constant(a, b, slope), start)

    @classmethod
    def parse(cls, a, b, derivative: str, value_at_a: float = 0.0, params=None, breakpoints=()):
        return cls(PiecewiseFunction.parse(a, b, derivative, params, breakpoints), value_at_a)

    @property
    def breakpoints(self) -> np.ndarray:
        return self.derivative.breakpoints

    def __call__(self, x) -> np.ndarray:
        return self.value_at_a + self._anti(x)

    def deriv(self, x) -> np.ndarray:
        return self.derivative(x)


class CoefficientSet:
    """The quadruple ``(p, q, r, s)`` on ``[a, b]`` with cached ``S`` and ``R``.

    Construction verifies that ``1/p, q, r, s`` are integrable (their
    absolute values integrate to a converged finite value) and that ``p > 0``
    at every quadrature sample.
    """

    def __init__(
        self,
        p: PiecewiseFunction,
        q: PiecewiseFunction,
        r: PiecewiseFunction,
        s: PiecewiseFunction,
        tol: float = DEFAULT_ATOL,
        check: bool = True,
    ):
        funcs = {"p": p, "q": q, "r": r, "s": s}
        ends = {(f.a, f.b) for f in funcs.values()}
        if len(ends) != 1:
            raise CoefficientError("p, q, r, s must share one interval")
        self.a, self.b = p.a, p.b
        self.p, self.q, self.r, self.s = p, q, r, s
        self.singular = tuple(any(f.singular[i] for f in funcs.values()) for i in (0, 1))
        self.breakpoints = np.array(sorted(set().union(*(f.breakpoints.tolist() for f in funcs.values()))))
        self.tol = tol
        if check:
            self._check()
        self.S = Antiderivative(s, tol)
        self.R = Antiderivative(r, tol)

    def _check(self):
        inv_p = lambda x: 1.0 / self.p(x)  # noqa: E731
        for name, fn in (("1/p", inv_p), ("q", self.q), ("r", self.r), ("s", self.s)):
            try:
                integrate(lambda x, fn=fn: np.abs(fn(x)), self.a, self.b, breakpoints=self.breakpoints, singular=self.singular, atol=1e-9, rtol=1e-9)
            except QuadratureError as exc:
                raise CoefficientError(f"{name} is not integrable on [{self.a:g}, {self.b:g}]: {exc}") from exc
        xs = self.sample_points()
        pv = self.p(xs)
        bad = np.flatnonzero(~(pv > 0))
        if bad.size:
            x = xs[bad[0]]
            raise CoefficientError(f"p must be positive almost everywhere; p({x:.6g}) = {pv[bad[0]]:.6g}")

    def sample_points(self, per_piece: int = 64) -> np.ndarray:
        """Gauss-Kronrod-like interior samples of every smooth subinterval."""
        edges = self.edges
        t = 0.5 * (np.polynomial.legendre.leggauss(per_piece)[0] + 1.0)
        pts = [lo + (hi - lo) * t for lo, hi in zip(edges[:-1], edges[1:])]
        return np.concatenate(pts)

    @property
    def edges(self) -> np.ndarray:
        return np.concatenate([[self.a], self.breakpoints, [self.b]])

    def constant_on(self, lo: float, hi: float) -> bool:
        mid = 0.5 * (lo + hi)
        return all(f.is_constant_on(int(f.piece_index(mid))) for f in (self.p, self.q, self.r, self.s))

    def matrix(self, x) -> np.ndarray:
        """The system matrix ``[[-s, 1/p], [q, r]]`` at ``x``, shape ``x.shape + (2, 2)``."""
        x = np.asarray(x, dtype=float)
        m = np.empty(x.shape + (2, 2))
        m[..., 0, 0] = -self.s(x)
        m[..., 0, 1] = 1.0 / self.p(x)
        m[..., 1, 0] = self.q(x)
        m[..., 1, 1] = self.r(x)
        return m

    def restrict(self, lo: float, hi: float) -> "CoefficientSet":
        return CoefficientSet(
            self.p.restrict(lo, hi), self.q.restrict(lo, hi), self.r.restrict(lo, hi), self.s.restrict(lo, hi), self.tol
        )

    def same_as(self, other: "CoefficientSet") -> bool:
        if other is self:
            return True
        if (self.a, self.b) != (other.a, other.b):
            return False
        for f, g in zip((self.p, self.q, self.r, self.s), (other.p, other.q, other.r, other.s)):
            if f.pieces != g.pieces or not np.array_equal(f.breakpoints, g.breakpoints):
                return False
        return True

    def __repr__(self):
        return f"CoefficientSet([{self.a:g}, {self.b:g}], p={self.p.pieces}, q={self.q.pieces}, r={self.r.pieces}, s={self.s.pieces})"


def coefficient_set(
    a: float,
    b: float,
    p: str | float = "1",
    q: str | float = "0",
    r: str | float = "0",
    s: str | float = "0",
    params: Mapping[str, float] | None = None,
    breakpoints: Sequence[float] = (),
    singular: tuple[bool, bool] = (False, False),
    tol: float = DEFAULT_ATOL,
) -> CoefficientSet:
    """Build a :class:`CoefficientSet` from expression strings.

    A string may list one expression per subinterval separated by ``|``
    when ``breakpoints`` are given.

    >>> c = coefficient_set(0, np.pi, q="-1")
    >>> float(c.q(1.0))
    -1.0
    """

    def build(value):
        if isinstance(value, PiecewiseFunction):
            return value
        if isinstance(value, (int, float)):
            value = repr(float(value))
        texts = [t.strip() for t in value.split("|")]
        return PiecewiseFunction.parse(a, b, texts, params, breakpoints if (len(texts) > 1 or breakpoints) else (), singular)

    return CoefficientSet(build(p), build(q), build(r), build(s), tol)
