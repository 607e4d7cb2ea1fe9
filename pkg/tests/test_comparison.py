import csv
import io
import math

import numpy as np
import pytest

from _problems import random_tilde_problem
from sturmcomp.coeffs import GaugeFunction, coefficient_set
from sturmcomp.comparison import (
    ComparisonProblem,
    HypothesisError,
    Report,
    Verdict,
    abc_coefficients,
    classify,
    compare,
    evaluate_con,
    gauge_identity_residual,
    gauged_function,
    quadratic_form,
    separation,
    stieltjes_integral,
    sturm_picone,
)
from sturmcomp.jacobi import JacobiProblem, embed, embedded_solution, solve_recurrence
from sturmcomp.search import leighton_problem, shoot_vanishing
from sturmcomp.solver import find_zeros, solve_ivp

TOL = 1e-10
PI = math.pi
HARMONIC = coefficient_set(0, PI, q="-1")
SIN = solve_ivp(HARMONIC, 0.0, 0.0, 1.0, tol=1e-12)
XS = np.linspace(0.05, PI - 0.05, 41)


def first_zero_set(b_max=6.0, breakpoints=(), **texts):
    """Coefficients restricted to [0, first zero of the solution with u(0) = 0]."""
    long = coefficient_set(0, b_max, breakpoints=breakpoints, **texts)
    b = find_zeros(solve_ivp(long, 0.0, 0.0, 1.0, tol=1e-12), tol=1e-13)[0].x
    return coefficient_set(0, b, breakpoints=breakpoints, **texts)


def self_problem(c):
    return ComparisonProblem(c, c, GaugeFunction.zero(c.a, c.b), GaugeFunction(c.s - c.r))


def test_classify_bands():
    assert classify(-1.0, 0.1) is Verdict.STRICTLY_NEGATIVE
    assert classify(1.0, 0.1) is Verdict.POSITIVE
    assert classify(0.05, 0.1) is Verdict.WEAK_NONPOSITIVE
    assert classify(-0.1, 0.1) is Verdict.WEAK_NONPOSITIVE
    assert classify(float("nan"), 0.1) is Verdict.INCONCLUSIVE


def test_quadratic_form_harmonic():
    assert abs(quadratic_form(HARMONIC, SIN, tol=TOL)) <= 1e-9


def test_quadratic_form_polynomial():
    free = coefficient_set(0, PI)
    value = quadratic_form(free, (lambda x: x * (PI - x), lambda x: PI - 2 * x), tol=1e-12)
    assert value == pytest.approx(PI**3 / 3, abs=1e-10)


def test_quadratic_form_needs_vanishing():
    with pytest.raises(HypothesisError):
        quadratic_form(HARMONIC, (np.cos, lambda x: -np.sin(x)))


def test_abc_self_comparison_vanishes():
    rng = np.random.default_rng(1)
    c, _ = random_tilde_problem(rng)
    A, B, C = abc_coefficients(self_problem(c))
    xs = np.linspace(c.a, c.b, 50)
    for fn in (A, B, C):
        assert np.max(np.abs(fn(xs))) <= 1e-12


def test_abc_picone_gauge():
    tilde = coefficient_set(0, 2, p="2 + sin(x)", q="-3 + x", r="0.3*x", s="0.3*x")
    target = coefficient_set(0, 2, p="1 + x/4", q="-5", r="cos(x)", s="cos(x)")
    F = GaugeFunction(tilde.s - target.s)
    G = GaugeFunction(2 * (tilde.s - target.s))
    A, B, C = abc_coefficients(ComparisonProblem(tilde, target, F, G))
    xs = np.linspace(0, 2, 30)
    eG = np.exp(G(xs))
    np.testing.assert_allclose(A(xs), (target.p(xs) - tilde.p(xs)) * eG, atol=1e-11)
    np.testing.assert_allclose(C(xs), (target.q(xs) - tilde.q(xs)) * eG, atol=1e-11)


def test_abc_leighton():
    g = 0.6
    prob, _ = leighton_problem(1.672, g)
    A, B, C = abc_coefficients(prob)
    assert np.max(np.abs(A(XS))) <= 1e-13 and np.max(np.abs(B(XS))) <= 1e-13
    np.testing.assert_allclose(C(XS), (1.672 - XS + g * g / 4) * np.exp(g * XS), rtol=1e-12)


def test_self_certificate_is_weak():
    cert = evaluate_con(self_problem(HARMONIC), SIN, TOL)
    assert abs(cert.value) <= TOL
    assert cert.verdict is Verdict.WEAK_NONPOSITIVE


def test_leighton_certificates():
    cert = evaluate_con(*leighton_problem(2.0, 0.0), TOL)
    assert cert.value == pytest.approx(PI * (4 - PI) / 4, abs=1e-9)
    assert cert.verdict is Verdict.POSITIVE
    cert = evaluate_con(*leighton_problem(1.672, 0.6), TOL)
    assert cert.verdict is Verdict.STRICTLY_NEGATIVE


def test_certificate_requires_vanishing():
    cos = solve_ivp(HARMONIC, 0.0, 1.0, 0.0)
    with pytest.raises(HypothesisError, match="vanish"):
        evaluate_con(self_problem(HARMONIC), cos)


def test_certificate_requires_solution():
    other = solve_ivp(coefficient_set(0, PI, q="-1.01"), 0.0, 0.0, 1.0)
    with pytest.raises(HypothesisError):
        evaluate_con(self_problem(HARMONIC), other)


def test_gauge_identity_harmonic():
    assert abs(gauge_identity_residual(HARMONIC, SIN, GaugeFunction.zero(0, PI), TOL)) <= 1e-9
    assert abs(gauge_identity_residual(HARMONIC, SIN, GaugeFunction.linear(0, PI, 0.6), TOL)) <= 1e-9


def test_gauge_identity_embedded_jacobi():
    p = JacobiProblem(0, 3, np.ones(3), [-2.0, -2.0])
    u = solve_recurrence(p, 0.0, 1.0)
    c, b = embed(p, u)
    sol = embedded_solution(c, p, 0.0, 1.0)
    assert b == 2.0
    assert abs(gauge_identity_residual(c, sol, GaugeFunction.zero(c.a, c.b), TOL)) <= 1e-9


@pytest.mark.parametrize("seed", range(3))
def test_reduction_identity(seed):
    # certificate = target quadratic form of e^F ut minus the (zero) gauge identity
    rng = np.random.default_rng(seed)
    tilde, _ = random_tilde_problem(rng)
    target, _ = random_tilde_problem(rng)
    target = coefficient_set(tilde.a, tilde.b, p="1.5", q="-2 + sin(x)", r="0.1", s="0.2*x")
    ut = shoot_vanishing(tilde)
    F = GaugeFunction.linear(tilde.a, tilde.b, rng.uniform(-1, 1))
    G = GaugeFunction.linear(tilde.a, tilde.b, rng.uniform(-1, 1))
    prob = ComparisonProblem(tilde, target, F, G)
    cert = evaluate_con(prob, ut, TOL)
    q = quadratic_form(target, gauged_function(prob, ut), TOL)
    res = gauge_identity_residual(tilde, ut, G, TOL)
    assert cert.value == pytest.approx(q - res, abs=1e-8)


def test_certificate_scales_quadratically():
    prob, ut = leighton_problem(1.672, 0.6)
    base = evaluate_con(prob, ut, TOL).value
    scaled = evaluate_con(prob, ut.scaled(3.0), TOL).value
    assert scaled == pytest.approx(9 * base, rel=1e-8)


def test_compare_self_has_exceptional_multiple():
    rep = compare(self_problem(HARMONIC), SIN, sweep_n=16, tol=TOL)
    assert rep.verdict is Verdict.WEAK_NONPOSITIVE
    assert rep.exceptional
    assert rep.consistent
    assert rep.sweep.n - rep.sweep.with_zero == 1  # sin itself


def test_compare_leighton_strict_sweep():
    rep = compare(*leighton_problem(1.672, 0.6), sweep_n=64, tol=TOL)
    assert rep.verdict is Verdict.STRICTLY_NEGATIVE
    assert rep.sweep.with_zero == 64 and rep.consistent


def test_compare_leighton_sharpness():
    rep = compare(*leighton_problem(1.676, 0.6), sweep_n=64, tol=TOL)
    assert rep.verdict in (Verdict.POSITIVE, Verdict.INCONCLUSIVE)
    assert rep.sweep.n > rep.sweep.with_zero


def test_picone_classical():
    target = coefficient_set(0, PI, q="-4")
    rep = sturm_picone(HARMONIC, target, SIN, TOL, sweep_n=16)
    assert rep.verdict is Verdict.STRICTLY_NEGATIVE
    sin2 = solve_ivp(target, 0.0, 0.0, 2.0, tol=TOL)
    np.testing.assert_allclose(find_zeros(sin2).positions, [PI / 2], atol=1e-9)


def test_picone_p_smaller():
    tilde = coefficient_set(0, PI, p="2", q="-2")
    target = coefficient_set(0, PI, p="1", q="-2")
    ut = solve_ivp(tilde, 0.0, 0.0, 1.0, tol=TOL)
    rep = sturm_picone(tilde, target, ut, TOL, sweep_n=16)
    assert rep.verdict is Verdict.STRICTLY_NEGATIVE
    assert rep.certificate.breakdown[0] < 0


def test_picone_equal_s_is_classical():
    tilde = first_zero_set(q="-1", r="0.2", s="0.2")
    target = coefficient_set(0, tilde.b, q="-1.5", r="0.2", s="0.2")
    rep = sturm_picone(tilde, target, shoot_vanishing(tilde), TOL, sweep_n=16)
    assert abs(rep.certificate.breakdown[1]) <= 1e-12
    assert rep.verdict is Verdict.STRICTLY_NEGATIVE and rep.consistent


def test_picone_stieltjes_b_part():
    # mu = pt (s - st) e^(-2S) grows smoothly and jumps up at x = 1
    st = "-0.1*x | -0.1*x - 0.3"
    tilde = first_zero_set(q="-1", r=st, s=st, breakpoints=[1.0])
    target = coefficient_set(0, tilde.b, q="-1.2")
    rep = sturm_picone(tilde, target, shoot_vanishing(tilde), TOL, sweep_n=8)
    assert abs(float(rep.details["B part - (-int vt^2 dmu)"])) <= 1e-8
    assert rep.certificate.breakdown[1] < 0
    assert rep.consistent and rep.verdict is Verdict.STRICTLY_NEGATIVE


def test_picone_hypothesis_witness():
    target = coefficient_set(0, PI, q="-1 + step(x - 2)")
    with pytest.raises(HypothesisError) as exc:
        sturm_picone(HARMONIC, target, SIN, TOL, sweep_n=0)
    assert exc.value.witness == pytest.approx(2.0, abs=0.05)


def test_picone_needs_r_equal_s():
    target = coefficient_set(0, PI, q="-1", r="0.1")
    with pytest.raises(HypothesisError, match="r = s"):
        sturm_picone(HARMONIC, target, SIN, TOL, sweep_n=0)


def test_separation_harmonic():
    cos = solve_ivp(HARMONIC, 0.0, 1.0, 0.0, tol=TOL)
    rep = separation(HARMONIC, SIN, cos, TOL)
    assert rep.consistent and not rep.exceptional
    assert float(rep.details["zeros of u"]) == pytest.approx(PI / 2, abs=1e-8)


def test_separation_dependent():
    rep = separation(HARMONIC, SIN, SIN.scaled(2.0), TOL)
    assert rep.exceptional and rep.consistent


def test_stieltjes_smooth_and_jump():
    val, _ = stieltjes_integral(lambda x: x, lambda x: x**2, 0.0, 1.0)
    assert val == pytest.approx(2 / 3, abs=1e-12)
    mu = lambda x: np.where(np.asarray(x) >= 0.5, 3.0, 0.0)  # noqa: E731
    val, _ = stieltjes_integral(np.cos, mu, 0.0, 1.0, [0.5], mu_left=lambda x: 0.0 * np.asarray(x))
    assert val == pytest.approx(3 * math.cos(0.5), abs=1e-14)


def test_report_csv():
    rep = Report("demo", evaluate_con(*leighton_problem(2.0, 0.0), TOL))
    rows = list(csv.reader(io.StringIO(rep.to_csv())))
    assert tuple(rows[0]) == Report.CSV_FIELDS
    assert rows[1][0] == "demo" and rows[1][3] == "Positive"
    assert float(rows[1][1]) == rep.certificate.value
    assert "verdict" in rep.to_text()
