"""Command-line interface.

Exit status: 0 when a verdict or result was computed (Inconclusive
included), 1 when a hypothesis of the chosen comparison fails, 2 on input
errors (unreadable or malformed files, bad flags, coefficients that are not
admissible, numerical failure).
"""

from __future__ import annotations

import argparse
import csv
import math
import sys

import numpy as np

from . import __version__
from .coeffs import CoefficientError, CoefficientSet, GaugeFunction
from .comparison import ComparisonProblem, HypothesisError, IntegrabilityError, compare, separation, sturm_picone
from .distributional import build_coefficients, distributional_compare, jump_residuals
from .expr import ParseError
from .jacobi import changes_sign, discrete_compare, solve_recurrence
from .problemfile import ProblemFileError, load_problem
from .quadrature import QuadratureError
from .search import (
    ShootingError,
    certificate_threshold,
    leighton_driver,
    leighton_problem,
    linear_gauge_scan,
    oscillation_threshold,
    shoot_vanishing,
)
from .solver import DEFAULT_TOL, SolverError, find_zeros, solve_ivp

EXIT_OK, EXIT_HYPOTHESIS, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    pass


# -- helpers -------------------------------------------------------------------------


def _float_list(text: str, flag: str) -> list[float]:
    from .problemfile import _constant

    try:
        return [_constant(t, {}) for t in text.replace(",", " ").split()]
    except (ParseError, ValueError) as exc:
        raise InputError(f"{flag}: {exc}") from exc


def _equation(pf, tol) -> CoefficientSet:
    if pf.kind == "coefficients":
        return pf.coefficient_set(tol)
    if pf.kind == "potential":
        return build_coefficients(pf.potential(), tol)
    raise ProblemFileError(pf.source, "expected a [coefficients] or [potential] problem, found [jacobi]")


def _start_point(c: CoefficientSet) -> float:
    if not c.singular[0]:
        return c.a
    if not c.singular[1]:
        return c.b
    return 0.5 * (c.a + c.b)


def _direction(theta: float) -> tuple[float, float]:
    """``(cos theta, sin theta)`` with rounding residue at multiples of pi/2 removed."""
    c, s = math.cos(theta), math.sin(theta)
    return (0.0 if abs(c) < 1e-15 else c), (0.0 if abs(s) < 1e-15 else s)


def _theta_solution(c, theta, tol):
    x0 = _start_point(c)
    return solve_ivp(c, x0, *_direction(theta), tol=tol)


def _sample_points(c: CoefficientSet, at: str | None) -> np.ndarray:
    if at:
        xs = np.array(_float_list(at, "--at"))
        bad = xs[(xs < c.a) | (xs > c.b)]
        if bad.size:
            raise InputError(f"--at: {bad[0]:g} is outside [{c.a:g}, {c.b:g}]")
        return xs
    return np.linspace(c.a, c.b, 11)


def _open_csv(path):
    if path == "-":
        return sys.stdout, False
    try:
        return open(path, "w", newline="", encoding="utf-8"), True
    except OSError as exc:
        raise InputError(f"--csv: cannot write {path}: {exc.strerror}") from exc


def _write_rows(path, header, rows):
    if not path:
        return
    fh, close = _open_csv(path)
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    finally:
        if close:
            fh.close()


def _write_report(path, report):
    if not path:
        return
    fh, close = _open_csv(path)
    try:
        fh.write(report.to_csv())
    finally:
        if close:
            fh.close()


def _gauges(tilde_pf, target_pf, a, b):
    g = target_pf.gauges(a, b) or tilde_pf.gauges(a, b)
    if g is None:
        return GaugeFunction.zero(a, b), GaugeFunction.zero(a, b)
    return g


def _same_interval(c1, c2, f1, f2):
    if (c1.a, c1.b) != (c2.a, c2.b):
        raise InputError(f"{f1} and {f2} use different intervals: [{c1.a:g}, {c1.b:g}] vs [{c2.a:g}, {c2.b:g}]")


# -- subcommands ----------------------------------------------------------------------


def cmd_solve(args):
    pf = load_problem(args.file)
    c = _equation(pf, args.tol)
    sol = _theta_solution(c, args.theta, args.tol)
    xs = _sample_points(c, args.at)
    st = sol.state(xs)
    print(f"solution with (u, v)({sol.x0:.10g}) = ({sol.initial[0]:.10g}, {sol.initial[1]:.10g}), accuracy {sol.accuracy:.2g}")
    print(f"{'x':>16} {'u':>22} {'v':>22}")
    for x, (u, v) in zip(xs, st):
        print(f"{x:16.10g} {u:22.15g} {v:22.15g}")
    _write_rows(args.csv, ("x", "u", "v"), [(repr(float(x)), repr(float(u)), repr(float(v))) for x, (u, v) in zip(xs, st)])
    return EXIT_OK


def cmd_zeros(args):
    pf = load_problem(args.file)
    c = _equation(pf, args.tol)
    sol = _theta_solution(c, args.theta, args.tol)
    zeros = find_zeros(sol, tol=args.tol)
    print(f"{len(zeros)} zero(s) in ({c.a:.10g}, {c.b:.10g})")
    for i, z in enumerate(zeros):
        print(f"  {i:3d}  x = {z.x:.12g}  in [{z.lo:.12g}, {z.hi:.12g}]  |v| >= {z.min_abs_v:.3g}")
    rows = [(i, repr(z.x), repr(z.lo), repr(z.hi), repr(z.min_abs_v)) for i, z in enumerate(zeros)]
    _write_rows(args.csv, ("index", "x", "lo", "hi", "min_abs_v"), rows)
    return EXIT_OK


def cmd_compare(args):
    tpf, gpf = load_problem(args.tilde), load_problem(args.target)
    tilde, target = _equation(tpf, args.tol), _equation(gpf, args.tol)
    _same_interval(tilde, target, args.tilde, args.target)
    F, G = _gauges(tpf, gpf, tilde.a, tilde.b)
    tilde_u = shoot_vanishing(tilde)
    report = compare(ComparisonProblem(tilde, target, F, G), tilde_u, args.sweep, args.tol)
    print(report.to_text())
    _write_report(args.csv, report)
    return EXIT_OK


def cmd_separation(args):
    pf = load_problem(args.file)
    c = _equation(pf, args.tol)
    tilde_u = shoot_vanishing(c)
    u = solve_ivp(c, c.a, *_direction(args.theta), tol=args.tol)
    report = separation(c, tilde_u, u, args.tol)
    print(report.to_text())
    _write_report(args.csv, report)
    return EXIT_OK


def cmd_picone(args):
    tpf, gpf = load_problem(args.tilde), load_problem(args.target)
    tilde, target = _equation(tpf, args.tol), _equation(gpf, args.tol)
    _same_interval(tilde, target, args.tilde, args.target)
    tilde_u = shoot_vanishing(tilde)
    report = sturm_picone(tilde, target, tilde_u, args.tol, args.sweep)
    print(report.to_text())
    _write_report(args.csv, report)
    return EXIT_OK


def cmd_jacobi(args):
    tilde = load_problem(args.tilde).jacobi()
    if args.target is None:
        theta = math.pi / 2 if args.theta is None else args.theta
        u0, u1 = _direction(theta)
        sol = solve_recurrence(tilde, u0, u1)
        print(f"solution on [{tilde.N0}, {tilde.N1}] with (u_N0, u_N0+1) = ({u0:.10g}, {u1:.10g})")
        for n, u in sol.to_rows():
            print(f"  {n:6d}  {u: .15g}")
        print(f"changes sign: {'yes' if changes_sign(sol, 1e-12) else 'no'}")
        _write_rows(args.csv, ("n", "u"), [(n, repr(u)) for n, u in sol.to_rows()])
        return EXIT_OK
    target = load_problem(args.target).jacobi()
    if not tilde.same_range(target):
        raise InputError(f"{args.tilde} and {args.target} use different index ranges")
    tilde_u = solve_recurrence(tilde, 0.0, 1.0)
    report = discrete_compare(tilde, target, tilde_u, args.sweep)
    print(report.to_text())
    _write_report(args.csv, report)
    return EXIT_OK


def cmd_distro(args):
    tpf = load_problem(args.tilde)
    tildeV = tpf.potential()
    c_tilde = build_coefficients(tildeV, args.tol)
    if args.target is None:
        theta = math.pi / 2 if args.theta is None else args.theta
        sol = _theta_solution(c_tilde, theta, args.tol)
        zeros = find_zeros(sol, tol=args.tol)
        print(f"solution with (u, v)({sol.x0:.10g}) = ({sol.initial[0]:.10g}, {sol.initial[1]:.10g})")
        print(f"zeros in (a, b): {', '.join(f'{z.x:.12g}' for z in zeros) or 'none'}")
        for x, res in jump_residuals(tildeV, sol):
            print(f"jump condition at {x:.10g}: residual {res:.3g}")
        xs = _sample_points(c_tilde, args.at)
        st = sol.state(xs)
        _write_rows(args.csv, ("x", "u", "v"), [(repr(float(x)), repr(float(u)), repr(float(v))) for x, (u, v) in zip(xs, st)])
        return EXIT_OK
    V = load_problem(args.target).potential()
    if (tildeV.a, tildeV.b) != (V.a, V.b):
        raise InputError(f"{args.tilde} and {args.target} use different intervals")
    tilde_u = shoot_vanishing(c_tilde)
    report = distributional_compare(tildeV, V, tilde_u, args.tol, args.sweep)
    print(report.to_text())
    _write_report(args.csv, report)
    return EXIT_OK


def cmd_leighton(args):
    report = leighton_driver(args.k, args.c, args.tol, args.sweep)
    print(report.to_text())
    if args.thresholds:
        print(f"  certificate threshold for this c   k = {certificate_threshold(args.c, args.tol):.8f}")
        print(f"  zero-free solutions appear at      k = {oscillation_threshold():.8f}")
    _write_report(args.csv, report)
    return EXIT_OK


def cmd_scan(args):
    lo_hi = _float_list(args.c, "--c")
    if len(lo_hi) != 2 or not lo_hi[0] < lo_hi[1]:
        raise InputError("--c: scan needs a range lo,hi with lo < hi")
    if args.tilde is None:
        prob, tilde_u = leighton_problem(args.k, 0.0, args.tol)
        tilde, target = prob.tilde, prob.target
    else:
        if args.target is None:
            raise InputError("scan needs both TILDE and TARGET files (or neither for the worked example)")
        tilde = _equation(load_problem(args.tilde), args.tol)
        target = _equation(load_problem(args.target), args.tol)
        _same_interval(tilde, target, args.tilde, args.target)
        tilde_u = shoot_vanishing(tilde)
    res = linear_gauge_scan(tilde, target, tilde_u, tuple(lo_hi), args.steps, args.tol, workers=args.workers)
    print(f"{'c':>14} {'value':>22} {'err':>10}")
    for c, v, e in res.table:
        mark = "  <- best" if c == res.best_c else ""
        print(f"{c:14.10g} {v:22.15g} {e:10.2g}{mark}")
    print(f"best c = {res.best_c:.10g}: value {res.best.value:.12g}, verdict {res.best.verdict}")
    _write_rows(args.csv, res.CSV_FIELDS, res.csv_rows())
    return EXIT_OK


# -- parser ----------------------------------------------------------------------------


def _positive_float(text):
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not value > 0:
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return value


def _angle(text):
    from .problemfile import _constant

    try:
        return _constant(text, {})
    except (ParseError, ValueError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _count(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be non-negative: {text!r}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sturmcomp",
        description="Oscillation and comparison certificates for -(p(u'+su))' + rp(u'+su) + qu = 0.",
        epilog="Exit status: 0 result computed, 1 hypothesis violated, 2 input error.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=_positive_float, default=DEFAULT_TOL, help="absolute tolerance (default 1e-10)")
    common.add_argument("--csv", metavar="PATH", help="also write CSV to PATH ('-' for standard output)")
    sweep = argparse.ArgumentParser(add_help=False)
    sweep.add_argument("--sweep", type=_count, default=64, metavar="N", help="target solutions in the theta sweep (default 64, 0 disables)")

    def add(name, help_text, description, parents=(common,)):
        return sub.add_parser(name, help=help_text, description=description, parents=list(parents))

    p = add(
        "solve",
        "solve an initial-value problem",
        "Solve the equation as the first-order system for (u, v), v = p(u'+su), starting from "
        "(cos THETA, sin THETA) at the left end (the right end or midpoint if it is singular).",
    )
    p.add_argument("file", help="problem file with [coefficients] or [potential]")
    p.add_argument("--theta", type=_angle, default=math.pi / 2, help="initial direction (default pi/2, i.e. u=0, v=1)")
    p.add_argument("--at", metavar="X1,X2,...", help="sample points (default 11 equally spaced)")
    p.set_defaults(func=cmd_solve)

    p = add(
        "zeros",
        "list zeros of a solution",
        "Locate all zeros in the open interval of the solution started from (cos THETA, sin THETA), "
        "with enclosures and the quasi-derivative bound that certifies simplicity.",
    )
    p.add_argument("file")
    p.add_argument("--theta", type=_angle, default=math.pi / 2, help="initial direction (default pi/2)")
    p.set_defaults(func=cmd_zeros)

    p = add(
        "compare",
        "general comparison certificate",
        "General comparison theorem with gauge functions F and G: evaluates the certificate for the "
        "endpoint-vanishing solution of TILDE and checks it against a sweep of TARGET solutions. "
        "The [gauge] section of TARGET (else TILDE) gives F' and G'; default F = G = 0.",
        (common, sweep),
    )
    p.add_argument("tilde", help="reference problem; its solution with u(a)=0 must vanish at b")
    p.add_argument("target", help="problem whose solutions are tested for zeros")
    p.set_defaults(func=cmd_compare)

    p = add(
        "separation",
        "separation of zeros",
        "Generalised separation theorem (F = 0, G = S - R): a solution independent of the "
        "endpoint-vanishing one must vanish in between.",
    )
    p.add_argument("file")
    p.add_argument("--theta", type=_angle, default=0.0, help="initial direction of the second solution at a (default 0)")
    p.set_defaults(func=cmd_separation)

    p = add(
        "picone",
        "generalised Sturm-Picone comparison",
        "Generalised Sturm-Picone comparison for r = s: checks p <= pt, q <= qt and the monotonicity of "
        "mu = pt(s - st)exp(-2S), then evaluates the certificate with G = 2F = 2St - 2S.",
        (common, sweep),
    )
    p.add_argument("tilde")
    p.add_argument("target")
    p.set_defaults(func=cmd_picone)

    p = add(
        "jacobi",
        "Jacobi difference equations",
        "Jacobi difference equations via the exact piecewise-constant embedding. With one file prints "
        "the solution from (cos THETA, sin THETA); with two runs the discrete comparison with an "
        "exhaustive sign-change sweep.",
        (common, sweep),
    )
    p.add_argument("tilde", help="problem file with a [jacobi] section")
    p.add_argument("target", nargs="?")
    p.add_argument("--theta", type=_angle, default=None, help="initial direction for the single-file mode (default pi/2)")
    p.set_defaults(func=cmd_jacobi)

    p = add(
        "distro",
        "distributional potentials",
        "Schrodinger equations with distributional potentials v = V' given by V and point masses "
        "(p = 1, q = -V^2, r = s = -V). With one file solves and checks the jump conditions; with two "
        "evaluates the certificate -int u^2 d(Vt - V).",
        (common, sweep),
    )
    p.add_argument("tilde", help="problem file with a [potential] section")
    p.add_argument("target", nargs="?")
    p.add_argument("--theta", type=_angle, default=None, help="initial direction for the single-file mode (default pi/2)")
    p.add_argument("--at", metavar="X1,X2,...", help="CSV sample points for the single-file mode")
    p.set_defaults(func=cmd_distro)

    p = add(
        "leighton",
        "Leighton's example with an exponential gauge",
        "Worked example after Leighton: -u'' + (k - 1 - x)u = 0 on (0, pi) against sin, with "
        "G = c x and F = G/2.  The certificate is int (k - x + c^2/4) e^(cx) sin^2.",
        (common, sweep),
    )
    p.add_argument("--k", type=float, default=2.0, help="target parameter (default 2)")
    p.add_argument("--c", type=float, default=0.0, help="gauge slope (default 0)")
    p.add_argument("--thresholds", action="store_true", help="also report the empirical thresholds in k")
    p.set_defaults(func=cmd_leighton)

    p = add(
        "scan",
        "scan the linear gauge family",
        "Minimise the certificate over G = c x, F = c x / 2 by a grid scan and bounded refinement. "
        "Without files uses the Leighton example with parameter --k.",
    )
    p.add_argument("tilde", nargs="?")
    p.add_argument("target", nargs="?")
    p.add_argument("--k", type=float, default=1.672, help="Leighton parameter when no files are given")
    p.add_argument("--c", default="0,1.5", metavar="LO,HI", help="range of c (default 0,1.5)")
    p.add_argument("--steps", type=_count, default=31, help="grid points (default 31)")
    p.add_argument("--workers", type=_count, default=0, help="threads for the grid scan")
    p.set_defaults(func=cmd_scan)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (HypothesisError, ShootingError, IntegrabilityError) as exc:
        print(f"sturmcomp {args.command}: hypothesis violated: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except (ProblemFileError, InputError) as exc:
        print(f"sturmcomp {args.command}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (CoefficientError, ParseError, ValueError) as exc:
        print(f"sturmcomp {args.command}: invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (SolverError, QuadratureError) as exc:
        print(f"sturmcomp {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
