"""Initial-value problems for the quasi-derivative system

    u' = -s u + v / p,     v' = q u + r v,      v = p (u' + s u),

with dense output and zero location.

The fundamental matrix is propagated from ``x0`` with a sixth-order Magnus
integrator (Gauss-Legendre sampling, so coefficients are never evaluated at
step ends).  Integration restarts at every coefficient breakpoint; on
subintervals where all four coefficients are constant a single exact 2x2
exponential covers the whole piece.  Segments ending at a declared singular
endpoint ``e`` are integrated in ``t`` with ``x = e + (o - e) t**4``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from .coeffs import CoefficientSet

__all__ = [
    "SolverError",
    "Solution",
    "Zero",
    "ZeroList",
    "solve_ivp",
    "find_zeros",
    "wronskian_drift",
    "theta_sweep",
    "expm2",
    "DEFAULT_TOL",
]

DEFAULT_TOL = 1e-10
_EPS = np.finfo(float).eps
_SUBST_POWER = 4

_R15 = math.sqrt(15.0)
_GAUSS3 = np.array([0.5 - _R15 / 10.0, 0.5, 0.5 + _R15 / 10.0])


class SolverError(RuntimeError):
    pass


def expm2(omega: np.ndarray) -> np.ndarray:
    """Exponential of a stack of real 2x2 matrices, shape ``(..., 2, 2)``."""
    a = omega[..., 0, 0]
    b = omega[..., 0, 1]
    c = omega[..., 1, 0]
    d = omega[..., 1, 1]
    tau = 0.5 * (a + d)
    h = 0.5 * (a - d)
    delta = h * h + b * c  # N @ N = delta * I for the traceless part N
    w = np.sqrt(np.abs(delta))
    small = w < 1e-4
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        ch = np.where(delta >= 0, np.cosh(w), np.cos(w))
        sh = np.where(delta >= 0, np.sinh(w), np.sin(w)) / np.where(small, 1.0, w)
    ch = np.where(small, 1.0 + delta / 2.0 + delta * delta / 24.0, ch)
    sh = np.where(small, 1.0 + delta / 6.0 + delta * delta / 120.0, sh)
    scale = np.exp(tau)
    out = np.empty(omega.shape)
    out[..., 0, 0] = scale * (ch + sh * h)
    out[..., 1, 1] = scale * (ch - sh * h)
    out[..., 0, 1] = scale * sh * b
    out[..., 1, 0] = scale * sh * c
    return out


def _comm(x, y):
    return x @ y - y @ x


class _Segment:
    """Propagation from ``x_start`` to ``x_end`` between consecutive breakpoints."""

    def __init__(self, coeffs: CoefficientSet, x_start: float, x_end: float, singular_end: bool):
        self.coeffs = coeffs
        self.x_start = x_start
        self.x_end = x_end
        self.constant = coeffs.constant_on(min(x_start, x_end), max(x_start, x_end))
        self.mapped = singular_end and not self.constant
        if self.mapped:
            self.s_start, self.s_end = 1.0, 0.0
        else:
            self.s_start, self.s_end = x_start, x_end
        self.sig: np.ndarray | None = None
        self.phi: np.ndarray | None = None

    def x_of(self, s):
        if self.mapped:
            return self.x_end + (self.x_start - self.x_end) * s**_SUBST_POWER
        return s

    def s_of(self, x):
        if self.mapped:
            ratio = np.clip((x - self.x_end) / (self.x_start - self.x_end), 0.0, 1.0)
            return ratio ** (1.0 / _SUBST_POWER)
        return x

    def generator(self, s):
        """Matrix of the system in the segment parameter, ``M(x(s)) dx/ds``."""
        s = np.asarray(s, dtype=float)
        m = self.coeffs.matrix(self.x_of(s))
        if self.mapped:
            jac = _SUBST_POWER * (self.x_start - self.x_end) * s ** (_SUBST_POWER - 1)
            m = m * jac[..., None, None]
        return m

    def magnus(self, s0, h):
        """Sixth-order Magnus exponent for steps ``[s0, s0 + h]`` (arrays)."""
        s0 = np.asarray(s0, dtype=float)
        h = np.asarray(h, dtype=float)
        pts = s0[..., None] + h[..., None] * _GAUSS3
        A = self.generator(pts)
        A1, A2, A3 = A[..., 0, :, :], A[..., 1, :, :], A[..., 2, :, :]
        hh = h[..., None, None]
        Q1 = hh * A2
        Q2 = (_R15 / 3.0) * hh * (A3 - A1)
        Q3 = (10.0 / 3.0) * hh * (A3 - 2.0 * A2 + A1)
        C12 = _comm(Q1, Q2)
        return (
            Q1
            + Q3 / 12.0
            - C12 / 12.0
            + _comm(Q2, Q3) / 240.0
            + _comm(Q1, _comm(Q1, Q3)) / 360.0
            - _comm(Q2, C12) / 240.0
            + _comm(Q1, _comm(Q1, C12)) / 720.0
        )

    def progress(self, s):
        return (np.asarray(s) - self.s_start) / (self.s_end - self.s_start)

    def integrate(self, phi0: np.ndarray, tol: float, length: float):
        span = self.s_end - self.s_start
        if self.constant:
            self.sig = np.array([self.s_start, self.s_end])
            step = expm2(self.generator(np.array(0.5 * (self.s_start + self.s_end))) * span)
            self.phi = np.stack([phi0, step @ phi0])
            return 0.0
        budget = tol * abs(self.x_end - self.x_start) / length
        if self.mapped:
            # half the budget is reserved for the final step into the singular end
            budget *= 0.5
        sig = [self.s_start]
        phis = [phi0]
        err_sum = 0.0
        s = self.s_start
        y = phi0
        h = span / 4.0
        direction = math.copysign(1.0, span)
        while direction * (self.s_end - s) > 0:
            remaining = self.s_end - s
            ynorm = max(1.0, float(np.max(np.abs(y))))
            if abs(h) >= abs(remaining) * (1 - 1e-12):
                h = remaining
            elif self.mapped:
                y1, err = self._trial(s, remaining, y)
                if err <= max(budget, 16 * _EPS) * ynorm:
                    sig.append(self.s_end)
                    phis.append(y1)
                    err_sum += err / ynorm
                    break
            y1, err = self._trial(s, h, y)
            allowed = max(budget * abs(h / span), 16 * _EPS) * ynorm
            if err <= allowed:
                s_new = self.s_end if h == remaining else s + h
                sig.append(s_new)
                phis.append(y1)
                err_sum += err / ynorm
                s, y = s_new, y1
            factor = 4.0 if err == 0 else min(4.0, max(0.2, 0.9 * (allowed / err) ** (1.0 / 7.0)))
            h = h * factor
            if direction * (self.s_end - s) > 0 and s + h == s:
                raise SolverError(f"step size underflow near x = {float(self.x_of(s)):.6g}")
        self.sig = np.array(sig)
        self.phi = np.stack(phis)
        return err_sum

    def _trial(self, s, h, y):
        """One step of size ``h`` and its error against two half steps."""
        half = 0.5 * h
        E = expm2(self.magnus(np.array([s, s, s + half]), np.array([h, half, half])))
        y1 = E[0] @ y
        y2 = E[2] @ (E[1] @ y)
        err = float(np.max(np.abs(y1 - y2)))
        return y1, (err if np.isfinite(err) else np.inf)

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        s = self.s_of(x)
        prog = self.progress(s)
        node_prog = self.progress(self.sig)
        i = np.clip(np.searchsorted(node_prog, prog, side="right") - 1, 0, len(self.sig) - 1)
        out = np.empty(x.shape + (2, 2))
        on_node = node_prog[i] == prog
        out[on_node] = self.phi[i[on_node]]
        rest = ~on_node
        if np.any(rest):
            ir = i[rest]
            omega = self.magnus(self.sig[ir], s[rest] - self.sig[ir])
            out[rest] = expm2(omega) @ self.phi[ir]
        return out


class _Fundamental:
    """Fundamental matrix ``Phi`` with ``Phi(x0) = I``."""

    def __init__(self, coeffs: CoefficientSet, x0: float, tol: float):
        a, b = coeffs.a, coeffs.b
        if not (a <= x0 <= b):
            raise SolverError(f"initial point {x0} outside [{a}, {b}]")
        if (x0 == a and coeffs.singular[0]) or (x0 == b and coeffs.singular[1]):
            raise SolverError("the initial point must not be a singular endpoint")
        self.coeffs = coeffs
        self.x0 = float(x0)
        self.tol = tol
        edges = coeffs.edges
        fwd_pts = [x0, *[t for t in edges if t > x0]]
        bwd_pts = [x0, *[t for t in edges[::-1] if t < x0]]
        length = b - a
        self.error_estimate = 0.0
        self.forward = self._chain(fwd_pts, coeffs.singular[1], length)
        self.backward = self._chain(bwd_pts, coeffs.singular[0], length)

    def _chain(self, pts, singular_far_end, length):
        segs = []
        phi = np.eye(2)
        for k in range(len(pts) - 1):
            last = k == len(pts) - 2
            seg = _Segment(self.coeffs, pts[k], pts[k + 1], singular_far_end and last)
            self.error_estimate += seg.integrate(phi, self.tol, length)
            phi = seg.phi[-1]
            segs.append(seg)
        return segs

    def nodes(self) -> np.ndarray:
        xs = [self.x0]
        for seg in self.forward + self.backward:
            xs.extend(np.asarray(seg.x_of(seg.sig), dtype=float).tolist())
        return np.unique(np.clip(xs, self.coeffs.a, self.coeffs.b))

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        flat = x.ravel()
        out = np.empty(flat.shape + (2, 2))
        done = np.zeros(flat.shape, dtype=bool)
        at0 = flat == self.x0
        out[at0] = np.eye(2)
        done |= at0
        for segs, side in ((self.forward, flat > self.x0), (self.backward, flat < self.x0)):
            for seg in segs:
                lo, hi = min(seg.x_start, seg.x_end), max(seg.x_start, seg.x_end)
                sel = side & ~done & (flat >= lo) & (flat <= hi)
                if np.any(sel):
                    out[sel] = seg.evaluate(flat[sel])
                    done |= sel
        if not np.all(done):
            bad = flat[~done][0]
            raise ValueError(f"x = {bad} outside [{self.coeffs.a}, {self.coeffs.b}]")
        return out.reshape(x.shape + (2, 2))


class Solution:
    """A real solution with its quasi-derivative, queryable anywhere on ``[a, b]``.

    ``state(x)`` returns ``(u, v)`` stacked on the last axis; ``u(x)`` and
    ``v(x)`` are shortcuts.  ``accuracy`` is an a-posteriori bound on the
    absolute error of ``u`` and ``v``, relative to the size of the initial
    state.
    """

    def __init__(self, coeffs: CoefficientSet, x0: float, A: float, B: float, fundamental: _Fundamental):
        self.coeffs = coeffs
        self.x0 = float(x0)
        self.initial = np.array([float(A), float(B)])
        self._fund = fundamental
        self.tol = fundamental.tol
        size = max(1.0, float(np.max(np.abs(self.initial))))
        self.accuracy = max(fundamental.error_estimate, fundamental.tol) * size

    @property
    def a(self):
        return self.coeffs.a

    @property
    def b(self):
        return self.coeffs.b

    def state(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = self._fund(x) @ self.initial
        if np.ndim(x) == 0:
            return out.reshape(2)
        at0 = x == self.x0
        out[at0] = self.initial
        return out

    def u(self, x):
        return self.state(x)[..., 0]

    def v(self, x):
        return self.state(x)[..., 1]

    __call__ = u

    def mesh(self) -> np.ndarray:
        return self._fund.nodes()

    def scaled(self, factor: float) -> "Solution":
        A, B = factor * self.initial
        return Solution(self.coeffs, self.x0, A, B, self._fund)

    def with_initial(self, A: float, B: float) -> "Solution":
        """Another solution of the same equation sharing the propagated fundamental matrix."""
        return Solution(self.coeffs, self.x0, A, B, self._fund)

    def to_csv(self, points: Sequence[float], path_or_file) -> None:
        pts = np.asarray(points, dtype=float)
        st = self.state(pts).reshape(-1, 2)
        rows = [(repr(float(x)), repr(float(u)), repr(float(v))) for x, (u, v) in zip(pts.ravel(), st)]
        if hasattr(path_or_file, "write"):
            _write_rows(path_or_file, ("x", "u", "v"), rows)
        else:
            with open(path_or_file, "w", newline="") as fh:
                _write_rows(fh, ("x", "u", "v"), rows)


def _write_rows(fh, header, rows):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)


def solve_ivp(
    c: CoefficientSet,
    x0: float,
    A: float,
    B: float,
    tol: float = DEFAULT_TOL,
    allow_trivial: bool = False,
) -> Solution:
    """Solve with ``u(x0) = A`` and ``p(u' + s u)(x0) = B`` on all of ``[a, b]``.

    >>> from sturmcomp.coeffs import coefficient_set
    >>> sol = solve_ivp(coefficient_set(0, np.pi, q="-1"), 0.0, 0.0, 1.0)
    >>> round(float(sol.u(np.pi / 2)), 9)
    1.0
    """
    if A == 0 and B == 0 and not allow_trivial:
        raise ValueError("(A, B) = (0, 0) gives the trivial solution; pass allow_trivial=True to request it")
    return Solution(c, x0, A, B, _Fundamental(c, float(x0), tol))


def theta_sweep(c: CoefficientSet, x0: float, n: int, tol: float = DEFAULT_TOL) -> list[Solution]:
    """Solutions with ``(u, v)(x0) = (cos t, sin t)`` for ``t = j pi / n``, ``j < n``.

    Every real solution is a non-zero multiple of exactly one of the
    directions in ``[0, pi)``; the members share one fundamental matrix.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    fund = _Fundamental(c, float(x0), tol)
    thetas = np.arange(n) * math.pi / n
    return [Solution(c, x0, math.cos(t), math.sin(t), fund) for t in thetas]


def solutions_at_angles(c: CoefficientSet, x0: float, thetas, tol: float = DEFAULT_TOL, base: Solution | None = None):
    """Like :func:`theta_sweep` for arbitrary angles, optionally reusing ``base``'s propagation."""
    if base is not None and base.coeffs is c and base.x0 == x0:
        fund = base._fund
    else:
        fund = _Fundamental(c, float(x0), tol)
    return [Solution(c, x0, math.cos(t), math.sin(t), fund) for t in thetas]


# -- zeros -----------------------------------------------------------------------


@dataclass(frozen=True)
class Zero:
    """A zero enclosed in ``[lo, hi]``; ``min_abs_v`` is ``|v|`` there (non-zero for simple zeros)."""

    x: float
    lo: float
    hi: float
    min_abs_v: float


@dataclass(frozen=True)
class ZeroList:
    zeros: tuple[Zero, ...]

    def __len__(self):
        return len(self.zeros)

    def __iter__(self):
        return iter(self.zeros)

    def __getitem__(self, i):
        return self.zeros[i]

    @property
    def positions(self) -> np.ndarray:
        return np.array([z.x for z in self.zeros])


def _wrapped(d):
    return (d + np.pi) % (2 * np.pi) - np.pi


def _dense_enough(c: CoefficientSet, xs: np.ndarray, scale: float, cap: int = 4096) -> np.ndarray:
    """Subdivide ``xs`` so the phase of ``(scale u, v)`` turns less than a quarter per step.

    The angular speed is at most the norm of the scaled system matrix, taken
    as the larger of its values at the two ends of each step.
    """
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        m = c.matrix(xs)
        m[..., 0, 1] *= scale
        m[..., 1, 0] /= scale
        rate = np.linalg.norm(m, ord=2, axis=(-2, -1))
    rate = np.where(np.isfinite(rate), rate, 0.0)
    steps = np.maximum(rate[:-1], rate[1:]) * np.diff(xs) / (np.pi / 4)
    counts = np.minimum(np.ceil(steps), cap).astype(int)
    extra = [lo + (hi - lo) * np.arange(1, k) / k for lo, hi, k in zip(xs[:-1], xs[1:], counts) if k > 1]
    return np.unique(np.concatenate([xs, *extra])) if extra else xs


def find_zeros(sol: Solution, interval: tuple[float, float] | None = None, tol: float = DEFAULT_TOL) -> ZeroList:
    """All zeros of ``sol.u`` in the open ``interval`` (default ``(a, b)``).

    Candidate brackets come from the integration mesh, refined until the
    phase ``atan2(v, scale * u)`` moves by less than a quarter turn between
    neighbours; each bracket is then narrowed to width ``tol``.  Zeros closer
    than ``max(2 tol, 1e-9 (hi - lo))`` to an end are regarded as zeros at
    that end and excluded.
    """
    lo, hi = interval if interval is not None else (sol.a, sol.b)
    if np.all(sol.initial == 0):
        raise ValueError("the trivial solution vanishes identically")
    mesh = np.union1d(sol.mesh(), sol.coeffs.sample_points(16))
    xs = np.unique(np.concatenate([[lo, hi], mesh[(mesh > lo) & (mesh < hi)]]))
    st = sol.state(xs)
    u, v = st[:, 0], st[:, 1]
    med_u = np.median(np.abs(u))
    med_v = np.median(np.abs(v))
    scale = med_v / med_u if med_u > 0 and med_v > 0 else 1.0
    xs = _dense_enough(sol.coeffs, xs, scale)
    st = sol.state(xs)
    u, v = st[:, 0], st[:, 1]
    for _ in range(60):
        phase = np.arctan2(v, scale * u)
        jump = np.abs(_wrapped(np.diff(phase))) >= np.pi / 2
        wide = np.diff(xs) > 4 * _EPS * np.maximum(np.abs(xs[:-1]), 1.0)
        todo = np.flatnonzero(jump & wide)
        if todo.size == 0 or xs.size > 200000:
            break
        mids = 0.5 * (xs[todo] + xs[todo + 1])
        new = sol.state(mids)
        xs = np.concatenate([xs, mids])
        u = np.concatenate([u, new[:, 0]])
        v = np.concatenate([v, new[:, 1]])
        order = np.argsort(xs, kind="stable")
        xs, u, v = xs[order], u[order], v[order]
    guard = max(2 * tol, 1e-9 * (hi - lo))
    zeros: list[Zero] = []
    for i in range(len(xs)):
        if u[i] == 0 and lo < xs[i] < hi:
            zeros.append(Zero(float(xs[i]), float(xs[i]), float(xs[i]), float(abs(v[i]))))
    for i in np.flatnonzero(u[:-1] * u[1:] < 0):
        x_lo, x_hi = xs[i], xs[i + 1]
        root = brentq(lambda t: float(sol.u(t)), x_lo, x_hi, xtol=tol, rtol=4 * _EPS)
        enc = (max(x_lo, root - tol / 2), min(x_hi, root + tol / 2))
        zeros.append(Zero(float(root), float(enc[0]), float(enc[1]), float(abs(sol.v(root)))))
    zeros = [z for z in zeros if z.x - lo > guard and hi - z.x > guard]
    zeros.sort(key=lambda z: z.x)
    return ZeroList(tuple(zeros))


def wronskian_drift(sol1: Solution, sol2: Solution, samples: int = 200) -> float:
    """Maximum deviation of ``(u1 v2 - u2 v1) exp(S - R)`` from its value at ``x0``.

    The weighted Wronskian is constant for exact solutions, so the drift is a
    global accuracy probe.
    """
    c = sol1.coeffs
    if not c.same_as(sol2.coeffs):
        raise ValueError("solutions belong to different coefficient sets")
    xs = np.concatenate([[sol1.x0], np.linspace(c.a, c.b, samples)])
    s1 = sol1.state(xs)
    s2 = sol2.state(xs)
    w = s1[:, 0] * s2[:, 1] - s2[:, 0] * s1[:, 1]
    weighted = w * np.exp(c.S(xs) - c.R(xs))
    return float(np.max(np.abs(weighted - weighted[0])))
