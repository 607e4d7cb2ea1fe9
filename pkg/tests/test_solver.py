import io
import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp as scipy_ivp

from _problems import random_smooth_set, unit
from sturmcomp.coeffs import coefficient_set
from sturmcomp.distributional import PotentialAntiderivative, build_coefficients
from sturmcomp.solver import SolverError, find_zeros, solve_ivp, theta_sweep, wronskian_drift

TOL = 1e-10
HARMONIC = coefficient_set(0, math.pi, q="-1")


def reference(c, x0, y0, xs):
    """Independent oracle: scipy's DOP853 on the first-order system."""
    sol = scipy_ivp(lambda x, y: c.matrix(np.array(x)) @ y, (x0, xs[-1]), y0, method="DOP853",
                    t_eval=xs, rtol=1e-12, atol=1e-13)
    return sol.y.T


def test_harmonic_sine():
    sol = solve_ivp(HARMONIC, 0.0, 0.0, 1.0, tol=TOL)
    u, v = sol.state(math.pi / 2)
    assert abs(u - 1) <= 10 * TOL and abs(v) <= 10 * TOL
    xs = np.linspace(0, math.pi, 50)
    np.testing.assert_allclose(sol.u(xs), np.sin(xs), atol=10 * TOL)


def test_free_equation_is_linear():
    c = coefficient_set(0, 3)
    sol = solve_ivp(c, 0.0, 0.0, 1.0, tol=TOL)
    xs = np.linspace(0, 3, 13)
    np.testing.assert_allclose(sol.u(xs), xs, atol=1e-12)


def test_tent_solution():
    V = PotentialAntiderivative.from_parts(0.0, 1.0, "0", [(0.5, -4.0)])
    sol = solve_ivp(build_coefficients(V), 0.0, 0.0, 1.0, tol=TOL)
    xs = np.linspace(0, 1, 21)
    np.testing.assert_allclose(sol.u(xs), np.minimum(xs, 1 - xs), atol=1e-12)
    assert abs(sol.u(1.0)) <= TOL


def test_start_in_the_middle():
    sol = solve_ivp(HARMONIC, math.pi / 2, 1.0, 0.0, tol=TOL)
    xs = np.linspace(0, math.pi, 31)
    np.testing.assert_allclose(sol.u(xs), np.sin(xs), atol=10 * TOL)


@pytest.mark.parametrize("seed", range(5))
def test_against_reference_integrator(seed):
    rng = np.random.default_rng(seed)
    c = random_smooth_set(rng)
    y0 = unit(rng.uniform(0, math.pi))
    xs = np.linspace(0, c.b, 40)
    ours = solve_ivp(c, 0.0, *y0, tol=TOL).state(xs)
    np.testing.assert_allclose(ours, reference(c, 0.0, list(y0), xs), atol=1e-8)


def test_linearity_and_determinism():
    rng = np.random.default_rng(11)
    c = random_smooth_set(rng)
    s1 = solve_ivp(c, 0.0, 1.0, 0.0, tol=TOL)
    s2 = solve_ivp(c, 0.0, 0.0, 1.0, tol=TOL)
    s3 = solve_ivp(c, 0.0, 2.0, -3.0, tol=TOL)
    xs = np.linspace(0, c.b, 25)
    np.testing.assert_allclose(s3.state(xs), 2 * s1.state(xs) - 3 * s2.state(xs), atol=1e-8)
    again = solve_ivp(c, 0.0, 2.0, -3.0, tol=TOL)
    assert np.array_equal(again.state(xs), s3.state(xs))


def test_halving_tolerance_changes_little():
    rng = np.random.default_rng(12)
    c = random_smooth_set(rng)
    xs = np.linspace(0, c.b, 25)
    coarse = solve_ivp(c, 0.0, 0.6, 0.8, tol=1e-8).state(xs)
    fine = solve_ivp(c, 0.0, 0.6, 0.8, tol=5e-9).state(xs)
    assert np.max(np.abs(coarse - fine)) <= 1e-7


def test_trivial_rejected():
    with pytest.raises(ValueError, match="trivial"):
        solve_ivp(HARMONIC, 0.0, 0.0, 0.0)


def test_singular_start_rejected():
    c = coefficient_set(0, 1, q="x^(-1/2)", singular=(True, False))
    with pytest.raises(SolverError, match="singular"):
        solve_ivp(c, 0.0, 0.0, 1.0)
    sol = solve_ivp(c, 0.5, 0.0, 1.0)
    assert np.isfinite(sol.u(0.0))


def test_zeros_of_sine():
    c = coefficient_set(0, 10, q="-1")
    zeros = find_zeros(solve_ivp(c, 0.0, 0.0, 1.0, tol=TOL), tol=1e-10)
    np.testing.assert_allclose(zeros.positions, [math.pi, 2 * math.pi, 3 * math.pi], atol=1e-9)
    for z in zeros:
        assert z.lo <= z.x <= z.hi and z.min_abs_v > 0.5


def test_endpoint_zeros_excluded():
    assert len(find_zeros(solve_ivp(HARMONIC, 0.0, 0.0, 1.0))) == 0


def test_zero_free_target_solution():
    c = coefficient_set(0, math.pi, q="k - 1 - x", params={"k": 1.676})
    assert len(find_zeros(solve_ivp(c, 0.0, 0.0, 1.0, tol=TOL))) == 0


def test_wronskian_harmonic():
    s = solve_ivp(HARMONIC, 0.0, 0.0, 1.0, tol=TOL)
    co = solve_ivp(HARMONIC, 0.0, 1.0, 0.0, tol=TOL)
    assert wronskian_drift(s, co) <= 10 * TOL
    assert wronskian_drift(s, s) == 0.0


@pytest.mark.parametrize("seed", range(5))
def test_wronskian_random(seed):
    rng = np.random.default_rng(100 + seed)
    c = random_smooth_set(rng)
    s1 = solve_ivp(c, 0.0, *unit(rng.uniform(0, math.pi)), tol=TOL)
    s2 = solve_ivp(c, 0.0, *unit(rng.uniform(0, math.pi)), tol=TOL)
    assert wronskian_drift(s1, s2) <= 100 * TOL


def test_wronskian_mismatched_sets():
    other = coefficient_set(0, math.pi, q="-2")
    with pytest.raises(ValueError):
        wronskian_drift(solve_ivp(HARMONIC, 0, 0, 1), solve_ivp(other, 0, 0, 1))


def test_theta_sweep_axes():
    sols = theta_sweep(HARMONIC, 0.0, 2)
    np.testing.assert_allclose(sols[0].initial, [1, 0])
    np.testing.assert_allclose(sols[1].initial, [0, 1], atol=1e-16)


def test_theta_sweep_contains_sin_and_cos():
    sols = theta_sweep(HARMONIC, 0.0, 4, tol=TOL)
    xs = np.linspace(0, math.pi, 9)
    np.testing.assert_allclose(sols[0].u(xs), np.cos(xs), atol=1e-9)
    np.testing.assert_allclose(sols[2].u(xs), np.sin(xs), atol=1e-9)


def test_theta_sweep_leighton_all_vanish():
    c = coefficient_set(0, math.pi, q="k - 1 - x", params={"k": 1.672})
    assert all(len(find_zeros(s)) >= 1 for s in theta_sweep(c, 0.0, 64))


def test_csv_output():
    buf = io.StringIO()
    solve_ivp(HARMONIC, 0.0, 0.0, 1.0).to_csv([0.0, 1.0], buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "x,u,v" and lines[1] == "0.0,0.0,1.0"
