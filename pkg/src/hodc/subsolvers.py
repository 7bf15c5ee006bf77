"""Inner solvers: x_{k+1} as a stationary point of the surrogate at x_k.

Supported regimes
-----------------
* (p, q) = (1, 1), any psi: closed-form proximal step.
* (p, q) in {(2, 1), (1, 2), (2, 2)}, psi = 0: global minimum of a cubic
  regularized quadratic, computed from the secular equation.
* (p, q) = (2, 1), psi != 0: the surrogate is convex; backtracking proximal
  gradient stopped by ||model subgradient|| <= theta ||y - x||^{min(p,q)}.

Everything else raises :class:`CapabilityError`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import CapabilityError, InputError, NumericalError
from .model import (
    ModelAnchor,
    ModelParams,
    surrogate_gradient_smooth_part,
    surrogate_smooth_value,
    surrogate_value,
)
from .oracles import SimpleConvexTerm

__all__ = [
    "CubicSubproblem",
    "CubicSolution",
    "InnerSolveResult",
    "cubic_objective",
    "solve_cubic_global",
    "solve_prox_linear",
    "assemble_cubic",
    "solve_inner",
    "SUPPORTED",
]

SUPPORTED = "(1,1) with any psi; (2,1) with any psi; (1,2) and (2,2) with psi = 0"

SECULAR_RTOL = 1e-10
SECULAR_MAXITER = 200


@dataclass(frozen=True)
class CubicSubproblem:
    """min_h <v, h> + 0.5 <H h, h> + (M/6) ||h||^3"""

    v: np.ndarray
    H: np.ndarray
    M: float

    def __post_init__(self):
        v = np.asarray(self.v, dtype=float)
        H = np.asarray(self.H, dtype=float)
        if H.shape != (v.size, v.size):
            raise InputError(f"H must be {v.size}x{v.size}, got {H.shape}")
        if not (np.all(np.isfinite(v)) and np.all(np.isfinite(H)) and math.isfinite(self.M)):
            raise InputError("cubic subproblem data must be finite")
        if self.M <= 0:
            raise InputError(f"M must be positive, got {self.M}")
        if np.max(np.abs(H - H.T), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(H), initial=0.0)):
            raise InputError("H must be symmetric")
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "H", 0.5 * (H + H.T))


@dataclass(frozen=True)
class CubicSolution:
    h_star: np.ndarray
    r_star: float
    lambda_min_H: float
    objective: float
    kkt_residual: float
    secular_residual: float
    hard_case: bool
    iterations: int

    def certificate_min_eig(self, sub: CubicSubproblem) -> float:
        """lambda_min(H + (M r*/2) I); nonnegative at a global minimizer."""
        return self.lambda_min_H + 0.5 * sub.M * self.r_star


@dataclass(frozen=True)
class InnerSolveResult:
    y: np.ndarray
    model_subgradient_norm_bound: float
    iterations: int
    status: str  # "exact" | "tolerance_met" | "max_iter"
    model_value: float = math.nan


def cubic_objective(sub: CubicSubproblem, h) -> float:
    h = np.asarray(h, dtype=float)
    return float(sub.v @ h + 0.5 * h @ sub.H @ h + sub.M / 6.0 * np.linalg.norm(h) ** 3)


def solve_cubic_global(sub: CubicSubproblem, tol: Optional[float] = None) -> CubicSolution:
    """Global minimizer of the cubic model via the secular equation.

    Solves r = ||(H + (M r/2) I)^{-1} v|| on r > max(0, -2 lambda_min/M) by
    safeguarded Newton/bisection in the eigenbasis of H.  When v has no
    component along the bottom eigenspace and the secular function is
    already nonpositive at the threshold (hard case), the step is completed
    along a bottom eigenvector.
    """
    v, H, M = sub.v, sub.H, sub.M
    vnorm = float(np.linalg.norm(v))
    if tol is None:
        tol = SECULAR_RTOL * (1.0 + vnorm)
    if tol <= 0:
        raise InputError("tol must be positive")
    try:
        lam, Q = np.linalg.eigh(H)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigendecomposition failed: {exc}") from exc
    w = Q.T @ v
    lam_min = float(lam[0])
    r_low = max(0.0, -2.0 * lam_min / M)

    scale = max(1.0, float(np.max(np.abs(lam))))
    bottom = lam <= lam_min + 1e-12 * scale
    w_bottom = float(np.linalg.norm(w[bottom]))
    w_top = np.where(bottom, 0.0, w)

    # parameterize by s = r - r_low so the shifts lam_i + M r/2 are formed
    # without cancellation: base_i + M s/2 with base = lam - lam_min + max(lam_min, 0)
    base = lam - lam_min + max(lam_min, 0.0)

    def phi(s, coeffs):
        shift = base + 0.5 * M * s
        z = -coeffs / shift
        nz = float(np.linalg.norm(z))
        # d||z||/ds = -(M/2) sum coeffs^2 / shift^3 / ||z||
        dnz = -0.5 * M * float(np.sum(coeffs**2 / shift**3)) / nz if nz > 0 else 0.0
        return nz - (r_low + s), dnz - 1.0, z

    hard_case = False
    iterations = 0
    negligible = 1e-14 * (1.0 + vnorm)

    if vnorm == 0.0 and lam_min >= 0:
        z = np.zeros_like(v)
        r_star = 0.0
    else:
        hard_case_possible = w_bottom <= negligible
        if hard_case_possible:
            if lam_min < 0 or np.any(~bottom):
                # value of the secular function just above the threshold without bottom components
                z_low = np.where(bottom, 0.0, -w_top / np.where(bottom, 1.0, base))
                phi_low = float(np.linalg.norm(z_low)) - r_low
            else:
                phi_low = -r_low
            if phi_low <= tol:
                hard_case = True
        if hard_case:
            z = np.where(bottom, 0.0, -w_top / np.where(bottom, 1.0, base))
            tau_sq = r_low**2 - float(z @ z)
            if tau_sq > 0:
                idx = int(np.flatnonzero(bottom)[0])
                z = z.copy()
                z[idx] = math.sqrt(tau_sq)
            r_star = r_low
        else:
            coeffs = w_top if hard_case_possible else w
            # upper bracket: ||z|| <= ||v|| / (|lam_min| + M s/2) meets r_low + s at
            # s = 2||v|| / (|lam_min| + sqrt(lam_min^2 + 2 M ||v||)), written without cancellation
            hi = 2.0 * vnorm / (abs(lam_min) + math.sqrt(lam_min**2 + 2.0 * M * vnorm))
            hi = hi * (1.0 + 1e-12) + 1e-300
            val, dval, z = phi(hi, coeffs)
            while val > 0 and hi < 1e300:  # roundoff only
                hi *= 2.0
                val, dval, z = phi(hi, coeffs)
            lo = 0.0
            s = hi
            # phi is convex and decreasing in s: Newton from the right may step
            # past lo, from the left it stays below the root.  Bisection keeps the bracket.
            for iterations in range(1, SECULAR_MAXITER + 1):
                if abs(val) <= tol:
                    break
                if val > 0:
                    lo = s
                else:
                    hi = s
                s_newton = s - val / dval if dval < 0 else math.nan
                if lo < s_newton < hi:
                    s = s_newton
                else:
                    s = 0.5 * (lo + hi)
                val, dval, z = phi(s, coeffs)
                if hi - lo <= 4 * np.finfo(float).eps * max(1e-300, hi):
                    break
            r_star = r_low + s
    h = Q @ z
    r_h = float(np.linalg.norm(h))
    secular_residual = abs(r_h - r_star)
    kkt = float(np.linalg.norm(H @ h + 0.5 * M * r_h * h + v))
    return CubicSolution(
        h_star=h,
        r_star=r_h,
        lambda_min_H=lam_min,
        objective=cubic_objective(sub, h),
        kkt_residual=kkt,
        secular_residual=secular_residual,
        hard_case=hard_case,
        iterations=iterations,
    )


# ---------------------------------------------------------------------------
# surrogate minimization


def solve_prox_linear(anchor: ModelAnchor, params: ModelParams, psi: SimpleConvexTerm) -> InnerSolveResult:
    """Exact minimizer of the (1, 1) surrogate: one proximal gradient step."""
    if (params.p, params.q) != (1, 1):
        raise InputError("solve_prox_linear requires p = q = 1")
    step = 1.0 / (params.M_p + params.M_q)
    grad = anchor.f_data.gradient - anchor.g_data.gradient
    y = np.asarray(psi.prox(anchor.x - step * grad, step), dtype=float)
    return InnerSolveResult(
        y=y,
        model_subgradient_norm_bound=0.0,
        iterations=1,
        status="exact",
        model_value=surrogate_value(anchor, params, psi, y),
    )


def assemble_cubic(anchor: ModelAnchor, params: ModelParams) -> CubicSubproblem:
    """Cubic model in h = y - x for (p, q) in {(2,1), (1,2), (2,2)} with psi = 0."""
    n = anchor.x.size
    eye = np.eye(n)
    v = anchor.f_data.gradient - anchor.g_data.gradient
    p, q = params.p, params.q
    if (p, q) == (2, 2):
        H = anchor.f_data.hessian - anchor.g_data.hessian
        M = params.M_p + params.M_q
    elif (p, q) == (2, 1):
        H = anchor.f_data.hessian + params.M_q * eye
        M = params.M_p
    elif (p, q) == (1, 2):
        H = -anchor.g_data.hessian + params.M_p * eye
        M = params.M_q
    else:
        raise CapabilityError(f"no cubic reduction for (p, q) = ({p}, {q}); supported: {SUPPORTED}")
    return CubicSubproblem(v, 0.5 * (H + H.T), M)


def _solve_cubic_path(anchor, params, psi):
    sub = assemble_cubic(anchor, params)
    sol = solve_cubic_global(sub)
    y = anchor.x + sol.h_star
    return InnerSolveResult(
        y=y,
        model_subgradient_norm_bound=sol.kkt_residual,
        iterations=sol.iterations,
        status="exact",
        model_value=surrogate_value(anchor, params, psi, y),
    )


def _prox_gradient_path(anchor, params, psi, tol_scale, max_iter, y0):
    """Backtracking proximal gradient on the convex surrogate."""
    x = anchor.x
    smooth = lambda y: surrogate_smooth_value(anchor, params, y)  # noqa: E731
    grad = lambda y: surrogate_gradient_smooth_part(anchor, params, y)  # noqa: E731
    theta = params.theta * tol_scale
    r = params.min_order

    # initial curvature estimate from the anchor hessians
    lip = params.M_q if params.q == 1 else 0.0
    if params.p == 2:
        lip += float(np.linalg.eigvalsh(anchor.f_data.hessian)[-1])
    else:
        lip += params.M_p
    lip = max(lip, 1e-12)

    y = np.array(y0, dtype=float)
    if not psi.contains(y):
        y = np.asarray(psi.prox(y, 1.0 / lip), dtype=float)
    s_y, g_y = smooth(y), grad(y)
    residual = math.inf
    for it in range(1, max_iter + 1):
        while True:
            step = 1.0 / lip
            y_new = np.asarray(psi.prox(y - step * g_y, step), dtype=float)
            d = y_new - y
            dd = float(d @ d)
            s_new = smooth(y_new)
            g_new = grad(y_new)
            if 0.5 * lip * dd > 1e-10 * (1.0 + abs(s_y)):
                ok = s_new <= s_y + float(g_y @ d) + 0.5 * lip * dd
            else:
                # value differences are at roundoff level: test the gradient instead
                ok = float(np.linalg.norm(g_new - g_y)) <= lip * math.sqrt(dd)
            if ok:
                break
            lip *= 2.0
        # xi = lip (y - y_new) - g_y lies in the subdifferential of psi at y_new
        residual = float(np.linalg.norm(g_new - g_y + lip * (y - y_new)))
        y, s_y, g_y = y_new, s_new, g_new
        if residual <= theta * float(np.linalg.norm(y - x)) ** r + 1e-12:
            return y, residual, it, "tolerance_met"
        lip = max(lip / 1.5, 1e-12)
    return y, residual, max_iter, "max_iter"


def solve_inner(
    anchor: ModelAnchor,
    params: ModelParams,
    psi: SimpleConvexTerm,
    max_iter: int = 10000,
    descent_slack: float = 1e-10,
) -> InnerSolveResult:
    """Stationary point of the surrogate at ``anchor`` satisfying m(y; x) <= F(x).

    Dispatches on (p, q, psi).  The iterative path restarts from y0 = x and then
    tightens the tolerance x0.1 (up to 3 times) if the descent test fails.
    """
    p, q = params.p, params.q
    if (p, q) == (1, 1):
        return solve_prox_linear(anchor, params, psi)
    if p > 2 or q > 2:
        raise CapabilityError(f"(p, q) = ({p}, {q}) has no subproblem solver; supported: {SUPPORTED}")
    if psi.is_zero:
        return _solve_cubic_path(anchor, params, psi)
    if q != 1:
        raise CapabilityError(
            f"(p, q) = ({p}, {q}) with nonzero psi gives a nonconvex surrogate without a certified solver; "
            f"supported: {SUPPORTED}"
        )

    F_x = anchor.F_value
    slack = descent_slack * (1.0 + abs(F_x))
    total = 0
    result = None
    for tol_scale in (1.0, 0.1, 0.01, 0.001):
        y, res, its, status = _prox_gradient_path(anchor, params, psi, tol_scale, max_iter, anchor.x)
        total += its
        value = surrogate_value(anchor, params, psi, y)
        result = InnerSolveResult(y=y, model_subgradient_norm_bound=res, iterations=total, status=status, model_value=value)
        if value <= F_x + slack:
            return result
    return result
