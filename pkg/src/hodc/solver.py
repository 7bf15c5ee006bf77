"""Outer loop with fixed regularization and its adaptive doubling variant."""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .errors import InputError
from .model import ModelAnchor, ModelParams
from .oracles import DcProblem, evaluate_objective
from .subsolvers import InnerSolveResult, solve_inner

__all__ = [
    "SolverConfig",
    "IterationRecord",
    "SolveOutcome",
    "run_hodc",
    "run_ahodc",
    "solve",
    "stationarity_residual",
    "residual_bound",
]

logger = logging.getLogger(__name__)

M_FLOOR = 1e-12


@dataclass(frozen=True)
class SolverConfig:
    params: ModelParams
    mode: str = "fixed"
    gamma: float = 1e-3
    M_p0: Optional[float] = None
    M_q0: Optional[float] = None
    max_outer: int = 500
    stop_step_norm: float = 1e-9
    stop_residual: float = 1e-8
    max_line_search_doublings: int = 60
    inner_max_iter: int = 10000
    descent_slack: float = 1e-10
    # lower clamp (M_p, M_q) for the adaptive halving update
    M_floor: Tuple[float, float] = (M_FLOOR, M_FLOOR)

    def __post_init__(self):
        if self.mode not in ("fixed", "adaptive"):
            raise InputError(f"mode must be 'fixed' or 'adaptive', got {self.mode!r}")
        if self.gamma <= 0:
            raise InputError("gamma must be positive")
        if self.max_outer < 1:
            raise InputError("max_outer must be >= 1")
        for name in ("M_p0", "M_q0"):
            val = getattr(self, name)
            if val is not None and val <= 0:
                raise InputError(f"{name} must be positive")


@dataclass(frozen=True)
class IterationRecord:
    k: int
    x: np.ndarray
    F_value: float
    step_norm: float
    residual_bound: float
    M_p_used: float
    M_q_used: float
    inner_status: str
    inner_iterations: int = 0
    doublings: int = 0


@dataclass
class SolveOutcome:
    final_x: np.ndarray
    trace: List[IterationRecord]
    status: str  # converged_step | converged_residual | max_iters | inner_failure
    F_final: float
    params: ModelParams
    message: str = ""
    extra: dict = field(default_factory=dict)


def stationarity_residual(problem: DcProblem, x, t: float) -> float:
    """(1/t) ||x - prox_{t psi}(x - t (grad f(x) - grad g(x)))||; zero iff x is critical."""
    if t <= 0:
        raise InputError("t must be positive")
    x = np.asarray(x, dtype=float)
    grad = np.asarray(problem.f.gradient(x)) - np.asarray(problem.g.gradient(x))
    return float(np.linalg.norm(x - problem.psi.prox(x - t * grad, t))) / t


def residual_bound(problem: DcProblem, params: ModelParams, y, step_norm: float, inner: InnerSolveResult) -> float:
    """Upper bound on dist(0, dF(y)) after an inner solve.

    With Lipschitz hints: (L_p+M_p)/p! s^p + (L_q+M_q)/q! s^q plus the inner
    stationarity residual.  Without hints: the prox residual at y.
    """
    L_p = problem.f.lipschitz_hint(params.p)
    L_q = problem.g.lipschitz_hint(params.q)
    if L_p is None or L_q is None:
        return stationarity_residual(problem, y, 1.0 / (params.M_p + params.M_q))
    p, q = params.p, params.q
    return (
        (L_p + params.M_p) / math.factorial(p) * step_norm**p
        + (L_q + params.M_q) / math.factorial(q) * step_norm**q
        + inner.model_subgradient_norm_bound
    )


def _start(problem: DcProblem, x0, params: ModelParams):
    x0 = np.array(x0, dtype=float)
    if x0.shape != (problem.n,):
        raise InputError(f"x0 must have length {problem.n}, got shape {x0.shape}")
    if not problem.psi.contains(x0):
        raise InputError("x0 is outside dom psi")
    F0 = evaluate_objective(problem, x0)
    if not math.isfinite(F0):
        raise InputError("F(x0) is not finite")
    rec = IterationRecord(
        k=0,
        x=x0,
        F_value=F0,
        step_norm=0.0,
        residual_bound=stationarity_residual(problem, x0, 1.0 / (params.M_p + params.M_q)),
        M_p_used=params.M_p,
        M_q_used=params.M_q,
        inner_status="initial",
    )
    return x0, F0, rec


def _warn_if_below_hints(problem: DcProblem, params: ModelParams):
    L_p = problem.f.lipschitz_hint(params.p)
    L_q = problem.g.lipschitz_hint(params.q)
    if (L_p is not None and params.M_p <= L_p) or (L_q is not None and params.M_q <= L_q):
        warnings.warn(
            f"M_p={params.M_p}, M_q={params.M_q} do not exceed the Lipschitz hints "
            f"L_p^f={L_p}, L_q^g={L_q}; the majorization guarantee is void",
            RuntimeWarning,
            stacklevel=3,
        )


def _stop_status(step: float, bound: float, config: SolverConfig) -> Optional[str]:
    if step < config.stop_step_norm:
        return "converged_step"
    if bound < config.stop_residual:
        return "converged_residual"
    return None


def run_hodc(problem: DcProblem, x0, config: SolverConfig) -> SolveOutcome:
    """Outer iteration with fixed M_p, M_q taken from ``config.params``."""
    params = config.params
    _warn_if_below_hints(problem, params)
    x, F_x, rec0 = _start(problem, x0, params)
    trace = [rec0]
    status, message = "max_iters", ""
    for k in range(1, config.max_outer + 1):
        anchor = ModelAnchor.build(problem, x, params.p, params.q)
        inner = solve_inner(anchor, params, problem.psi, max_iter=config.inner_max_iter, descent_slack=config.descent_slack)
        if not inner.model_value <= F_x + config.descent_slack * (1.0 + abs(F_x)):
            status = "inner_failure"
            message = f"surrogate descent m(x_{k}; x_{k-1}) <= F(x_{k-1}) violated: {inner.model_value!r} > {F_x!r}"
            logger.warning(message)
            break
        y = np.asarray(inner.y, dtype=float)
        step = float(np.linalg.norm(y - x))
        F_y = evaluate_objective(problem, y)
        bound = residual_bound(problem, params, y, step, inner)
        trace.append(
            IterationRecord(
                k=k,
                x=y,
                F_value=F_y,
                step_norm=step,
                residual_bound=bound,
                M_p_used=params.M_p,
                M_q_used=params.M_q,
                inner_status=inner.status,
                inner_iterations=inner.iterations,
            )
        )
        x, F_x = y, F_y
        stop = _stop_status(step, bound, config)
        if stop:
            status = stop
            break
    return SolveOutcome(final_x=x, trace=trace, status=status, F_final=F_x, params=params, message=message)


def run_ahodc(problem: DcProblem, x0, config: SolverConfig) -> SolveOutcome:
    """Adaptive variant: double (M_p, M_q) until F drops by gamma ||step||^{(p+q+2)/2}.

    After acceptance with i doublings the next trial values are 2^{i-1} M^k,
    so an immediately accepted step halves the regularization.
    """
    base = config.params
    M_p = config.M_p0 if config.M_p0 is not None else base.M_p
    M_q = config.M_q0 if config.M_q0 is not None else base.M_q
    params = base.with_regularization(M_p, M_q)
    x, F_x, rec0 = _start(problem, x0, params)
    trace = [rec0]
    exponent = base.descent_exponent
    status, message = "max_iters", ""
    for k in range(1, config.max_outer + 1):
        anchor = ModelAnchor.build(problem, x, base.p, base.q)
        accepted = None
        tries = 0
        for i in range(config.max_line_search_doublings + 1):
            trial = base.with_regularization(2.0**i * M_p, 2.0**i * M_q)
            inner = solve_inner(anchor, trial, problem.psi, max_iter=config.inner_max_iter, descent_slack=config.descent_slack)
            tries += inner.iterations
            y = np.asarray(inner.y, dtype=float)
            step = float(np.linalg.norm(y - x))
            F_y = evaluate_objective(problem, y)
            # roundoff allowance only; the sufficient-decrease test itself is exact
            if F_y <= F_x - config.gamma * step**exponent + 4 * np.finfo(float).eps * (1.0 + abs(F_x)):
                accepted = (i, trial, inner, y, step, F_y)
                break
        if accepted is None:
            status = "inner_failure"
            message = (
                f"line search exceeded {config.max_line_search_doublings} doublings at iteration {k}; "
                "check the oracles and the convexity of f and g"
            )
            logger.warning(message)
            break
        i, trial, inner, y, step, F_y = accepted
        bound = residual_bound(problem, trial, y, step, inner)
        trace.append(
            IterationRecord(
                k=k,
                x=y,
                F_value=F_y,
                step_norm=step,
                residual_bound=bound,
                M_p_used=trial.M_p,
                M_q_used=trial.M_q,
                inner_status=inner.status,
                inner_iterations=tries,
                doublings=i,
            )
        )
        M_p = max(2.0 ** (i - 1) * M_p, config.M_floor[0])
        M_q = max(2.0 ** (i - 1) * M_q, config.M_floor[1])
        x, F_x = y, F_y
        stop = _stop_status(step, bound, config)
        if stop:
            status = stop
            break
    return SolveOutcome(final_x=x, trace=trace, status=status, F_final=F_x, params=base, message=message)


def solve(problem: DcProblem, x0, config: SolverConfig) -> SolveOutcome:
    if config.mode == "adaptive":
        return run_ahodc(problem, x0, config)
    return run_hodc(problem, x0, config)
