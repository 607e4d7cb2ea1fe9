"""Oscillation and comparison certificates for generalised Sturm-Liouville
equations ``-(p (u' + s u))' + r p (u' + s u) + q u = 0`` with integrable
coefficients."""

__version__ = "0.1.0"

from .coeffs import (
    Antiderivative,
    CoefficientError,
    CoefficientSet,
    GaugeFunction,
    PiecewiseFunction,
    antiderivative,
    coefficient_set,
)
from .comparison import (
    Certificate,
    ComparisonProblem,
    HypothesisError,
    IntegrabilityError,
    Report,
    Verdict,
    abc_coefficients,
    compare,
    evaluate_con,
    gauge_identity_residual,
    quadratic_form,
    separation,
    sturm_picone,
)
from .distributional import PotentialAntiderivative, build_coefficients, distributional_compare, measure_nonneg
from .expr import ParseError, parse_expr
from .jacobi import JacobiProblem, changes_sign, dcon_value, discrete_compare, embed, solve_recurrence
from .quadrature import QuadratureError, integrate
from .search import ShootingError, leighton_driver, linear_gauge_scan, shoot_vanishing
from .solver import Solution, SolverError, find_zeros, solve_ivp, theta_sweep, wronskian_drift
