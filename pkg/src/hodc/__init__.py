"""Higher-order Taylor surrogate methods for DC programs F = f + psi - g."""
from .diagnostics import (
    DescentAudit,
    RateEnvelope,
    RateFitReport,
    audit_descent,
    audit_rate,
    descent_constant,
    rate_envelope,
    summability_check,
)
from .errors import CapabilityError, InputError, NumericalError, OracleError
from .model import ModelAnchor, ModelParams, surrogate_gradient_smooth_part, surrogate_value, taylor_value
from .oracles import (
    BUILTIN_PROBLEMS,
    DcProblem,
    SimpleConvexTerm,
    SmoothOracle,
    builtin_problem,
    check_derivatives,
    evaluate_objective,
    l1_term,
    log_sum_exp_oracle,
    make_lasso_minus_concave,
    make_lse_minus_lse,
    make_poly_dc,
    make_quad_minus_quad,
    nonneg_indicator,
    quadratic_oracle,
    zero_term,
)
from .solver import IterationRecord, SolveOutcome, SolverConfig, run_ahodc, run_hodc, solve, stationarity_residual
from .subsolvers import CubicSolution, CubicSubproblem, InnerSolveResult, solve_cubic_global, solve_inner, solve_prox_linear

__version__ = "0.1.0"
