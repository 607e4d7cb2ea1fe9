import math

import numpy as np
import pytest

from sturmcomp.coeffs import coefficient_set
from sturmcomp.comparison import Verdict, evaluate_con
from sturmcomp.jacobi import JacobiProblem, embed, solve_recurrence
from sturmcomp.search import (
    ShootingError,
    certificate_threshold,
    leighton_closed_form,
    leighton_driver,
    leighton_problem,
    linear_gauge_scan,
    oscillation_threshold,
    shoot_vanishing,
)

PI = math.pi


def test_shoot_sine():
    sol = shoot_vanishing(coefficient_set(0, PI, q="-1"))
    assert abs(sol.u(PI)) <= 1e-10
    assert sol.u(PI / 2) == pytest.approx(1.0, abs=1e-10)


def test_shoot_failure_reports_residual():
    with pytest.raises(ShootingError) as exc:
        shoot_vanishing(coefficient_set(0, 3, q="-1"))
    # scaled by max|u| on a sample grid, which is just below 1 for sin
    assert exc.value.residual == pytest.approx(math.sin(3.0), rel=1e-4)


def test_shoot_embedded_jacobi():
    p = JacobiProblem(0, 3, np.ones(3), [-2.0, -2.0])
    u = solve_recurrence(p, 0.0, 1.0)
    c, b = embed(p, u)
    sol = shoot_vanishing(c)
    np.testing.assert_allclose(sol.u(np.array([0.0, 1.0, 2.0])), u.u[:3], atol=1e-12)


def test_driver_closed_form():
    rep = leighton_driver(2.0, 0.0, sweep_n=0)
    assert rep.certificate.value == pytest.approx(PI * (4 - PI) / 4, abs=1e-9)
    assert rep.verdict is Verdict.POSITIVE


def test_driver_random_k_closed_form():
    rng = np.random.default_rng(7)
    for k in rng.uniform(0, 3, 10):
        rep = leighton_driver(float(k), 0.0, sweep_n=0)
        assert rep.certificate.value == pytest.approx(leighton_closed_form(k), abs=1e-9)


def test_driver_thresholds():
    strict = leighton_driver(1.672, 0.6, sweep_n=64)
    assert strict.verdict is Verdict.STRICTLY_NEGATIVE and strict.sweep.with_zero == 64
    sharp = leighton_driver(1.676, 0.6, sweep_n=64)
    assert sharp.verdict is not Verdict.STRICTLY_NEGATIVE and sharp.sweep.with_zero < sharp.sweep.n


def test_monotone_in_k():
    values = [evaluate_con(*leighton_problem(k, 0.6)).value for k in np.linspace(1.0, 2.5, 7)]
    assert np.all(np.diff(values) > 0)


def test_empirical_thresholds():
    kc = certificate_threshold(0.6)
    ko = oscillation_threshold()
    assert 1.672 <= kc < ko <= 1.676
    assert abs(evaluate_con(*leighton_problem(kc, 0.6)).value) <= 1e-9


def test_scan_finds_negative_and_is_minimal():
    prob, ut = leighton_problem(1.672, 0.0)
    res = linear_gauge_scan(prob.tilde, prob.target, ut, (0.0, 1.2), steps=13, workers=4)
    assert res.best.value < 0
    assert 0.4 < res.best_c < 0.8
    assert all(res.best.value <= v for _, v, _ in res.table)
    assert [row[0] for row in res.table] == sorted(row[0] for row in res.table)


def test_scan_grid_point_zero_matches_closed_form():
    prob, ut = leighton_problem(1.5, 0.0)
    res = linear_gauge_scan(prob.tilde, prob.target, ut, (-1.0, 1.0), steps=5, refine=False)
    table = {c: v for c, v, _ in res.table}
    assert table[0.0] == pytest.approx(leighton_closed_form(1.5), abs=1e-9)


def test_scan_harmonic_minimum_at_zero():
    c = coefficient_set(0, PI, q="-1")
    ut = shoot_vanishing(c)
    res = linear_gauge_scan(c, c, ut, (-1.0, 1.0), steps=9)
    assert all(v >= -1e-9 for _, v, _ in res.table)
    assert abs(res.best_c) <= 1e-4 and abs(res.best.value) <= 1e-9


def test_scan_serial_equals_concurrent():
    prob, ut = leighton_problem(1.672, 0.0)
    one = linear_gauge_scan(prob.tilde, prob.target, ut, (0.0, 1.0), steps=6, refine=False)
    many = linear_gauge_scan(prob.tilde, prob.target, ut, (0.0, 1.0), steps=6, refine=False, workers=3)
    assert one.table == many.table and one.best_c == many.best_c


def test_scan_bad_range():
    prob, ut = leighton_problem(1.672, 0.0)
    with pytest.raises(ValueError):
        linear_gauge_scan(prob.tilde, prob.target, ut, (1.0, 0.0))
