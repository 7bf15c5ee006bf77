"""Post-hoc checks of solver traces against the descent and rate bounds."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from .errors import InputError
from .model import ModelParams
from .solver import IterationRecord

__all__ = [
    "DescentAudit",
    "RateEnvelope",
    "RateFitReport",
    "descent_constant",
    "audit_descent",
    "rate_envelope",
    "audit_rate",
    "summability_check",
]

MIN_RATE_TRACE = 10


def _slack(F: float) -> float:
    return 1e-8 * (1.0 + abs(F))


def descent_constant(params: ModelParams, M_p: float, M_q: float, L_p: float, L_q: float) -> float:
    """2 sqrt((M_p - L_p)/(p+1)! * (M_q - L_q)/(q+1)!), or nan if some M <= L."""
    if M_p <= L_p or M_q <= L_q:
        return math.nan
    a = (M_p - L_p) / math.factorial(params.p + 1)
    b = (M_q - L_q) / math.factorial(params.q + 1)
    return 2.0 * math.sqrt(a * b)


@dataclass
class DescentAudit:
    per_step_lhs: List[float]
    per_step_rhs: List[float]
    violations: List[Tuple[int, float]]
    applicable: bool = True
    notes: str = ""

    @property
    def passed(self) -> bool:
        return self.applicable and not self.violations

    def to_dict(self) -> dict:
        return {
            "per_step_lhs": self.per_step_lhs,
            "per_step_rhs": self.per_step_rhs,
            "violations": [list(v) for v in self.violations],
            "applicable": self.applicable,
            "pass": self.passed,
            "notes": self.notes,
        }


def audit_descent(trace: Sequence[IterationRecord], params: ModelParams, lipschitz: Tuple[float, float]) -> DescentAudit:
    """Check F(x_{k-1}) - F(x_k) >= c_k ||x_k - x_{k-1}||^{(p+q+2)/2} - slack at every step.

    ``lipschitz`` is (L_p^f, L_q^g).  Records whose M values do not exceed the
    hints make the audit inapplicable.
    """
    L_p, L_q = lipschitz
    lhs, rhs, violations = [], [], []
    bad = [r.k for r in trace[1:] if r.M_p_used <= L_p or r.M_q_used <= L_q]
    if bad:
        return DescentAudit([], [], [], applicable=False, notes=f"M <= L at records {bad[:10]}; audit inapplicable")
    e = params.descent_exponent
    for prev, rec in zip(trace, trace[1:]):
        drop = prev.F_value - rec.F_value
        need = descent_constant(params, rec.M_p_used, rec.M_q_used, L_p, L_q) * rec.step_norm**e
        lhs.append(drop)
        rhs.append(need)
        if drop < need - _slack(prev.F_value):
            violations.append((rec.k, need - drop))
    notes = "no steps" if len(trace) < 2 else ""
    return DescentAudit(lhs, rhs, violations, notes=notes)


@dataclass
class RateEnvelope:
    ks: np.ndarray
    running_min: np.ndarray
    envelope: np.ndarray
    violations: List[int]
    C_x: float
    C_pq: float
    F_lower: float

    @property
    def holds(self) -> bool:
        return not self.violations


def _C_pq(params: ModelParams, M_p: float, M_q: float, L_p: float, L_q: float, C_x: float) -> float:
    p, q = params.p, params.q
    a = (L_p + M_p) / math.factorial(p)
    b = (L_q + M_q) / math.factorial(q)
    return max(a * C_x ** (p - q) + b, a + b * C_x ** (q - p)) if C_x > 0 else a + b


def rate_envelope(
    trace: Sequence[IterationRecord],
    params: ModelParams,
    lipschitz: Tuple[float, float],
    F_lower: Optional[float] = None,
) -> RateEnvelope:
    """Running minimum of residual_bound against C (F0 - F_lower)^a / (2 sqrt(ab))^a * k^-a.

    a = 2 min(p,q)/(p+q+2).  C_x is the largest observed step, C is the max over
    records of C_p^q plus theta (inexact inner solves add theta s^min to the
    residual), and the descent constant is the smallest over records.
    ``F_lower`` defaults to the final objective value, which is valid for the
    finite trace because F is monotone along it.
    """
    L_p, L_q = lipschitz
    recs = list(trace[1:])
    F0 = trace[0].F_value
    if F_lower is None:
        F_lower = min(r.F_value for r in trace)
    alpha = 2.0 * params.min_order / (params.p + params.q + 2)
    if not recs:
        return RateEnvelope(np.array([]), np.array([]), np.array([]), [], 0.0, 0.0, F_lower)
    C_x = max(r.step_norm for r in recs)
    C = max(_C_pq(params, r.M_p_used, r.M_q_used, L_p, L_q, C_x) for r in recs)
    if any(r.inner_status != "exact" for r in recs):
        C += params.theta
    c = min(descent_constant(params, r.M_p_used, r.M_q_used, L_p, L_q) for r in recs)
    ks = np.array([r.k for r in recs], dtype=float)
    running = np.minimum.accumulate([r.residual_bound for r in recs])
    gap = max(F0 - F_lower, 0.0)
    if math.isnan(c):
        env = np.full_like(ks, math.nan)
        violations = []
    else:
        env = C * (gap / c) ** alpha * ks ** (-alpha)
        tol = 1e-9 * env + 1e-14
        violations = [int(k) for k, m, e, t in zip(ks, running, env, tol) if m > e + t]
    return RateEnvelope(ks, running, env, violations, C_x, C, F_lower)


@dataclass
class RateFitReport:
    fitted_exponent: Optional[float]
    theoretical_exponent: float
    regime: str  # sublinear | linear | superlinear_observed
    kl_r_estimate: Optional[float]
    notes: str
    geometric_r_squared: Optional[float] = None
    geometric_ratio: Optional[float] = None
    envelope_holds: Optional[bool] = None
    envelope_violations: List[int] = field(default_factory=list)
    F_lower_used: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "fitted_exponent": self.fitted_exponent,
            "theoretical_exponent": self.theoretical_exponent,
            "regime": self.regime,
            "kl_r_estimate": self.kl_r_estimate,
            "notes": self.notes,
            "geometric_r_squared": self.geometric_r_squared,
            "geometric_ratio": self.geometric_ratio,
            "envelope_holds": self.envelope_holds,
            "envelope_violations": self.envelope_violations,
            "F_lower_used": self.F_lower_used,
        }


def _tail(n: int) -> int:
    return min(n, max(MIN_RATE_TRACE, math.ceil(0.3 * n)))


def _fit(xs, ys):
    if len(xs) < 3 or np.ptp(xs) == 0:
        return None
    res = stats.linregress(xs, ys)
    r2 = res.rvalue**2 if np.ptp(ys) > 0 else 1.0
    return res.slope, r2


def audit_rate(
    trace: Sequence[IterationRecord],
    params: ModelParams,
    lipschitz: Optional[Tuple[float, float]] = None,
    F_lower: Optional[float] = None,
) -> RateFitReport:
    """Fit the empirical residual exponent and classify the convergence regime.

    The residual exponent is the least-squares slope of log(running min of
    residual_bound) against log k over the trace tail.  The regime comes from
    the tail sums zeta_k = sum_{j>=k} ||x_{j+1} - x_j||: a geometric fit with
    R^2 >= 0.9 (better than the power-law fit) is linear, collapsing ratios are
    superlinear, anything else is sublinear with r fitted from the power law.
    """
    if len(trace) < MIN_RATE_TRACE:
        raise InputError(f"rate audit needs at least {MIN_RATE_TRACE} records, got {len(trace)}")
    theory = -2.0 * params.min_order / (params.p + params.q + 2)
    recs = list(trace[1:])
    notes = []

    ks = np.array([r.k for r in recs], dtype=float)
    running = np.minimum.accumulate([r.residual_bound for r in recs])
    w = _tail(len(recs))
    tk, tr = ks[-w:], running[-w:]
    pos = tr > 0
    fitted = None
    fit = _fit(np.log(tk[pos]), np.log(tr[pos])) if pos.sum() >= 3 else None
    if fit is None:
        notes.append("residuals vanish on the tail; exponent undefined")
    else:
        fitted = float(fit[0])

    steps = np.array([r.step_norm for r in recs])
    zeta = np.cumsum(steps[::-1])[::-1]
    tz_k, tz = ks[-w:], zeta[-w:]
    pos = tz > 0
    regime, r_est, r2_geo, ratio = "sublinear", None, None, None
    if pos.sum() < 3:
        regime = "superlinear_observed"
        notes.append("iterates stopped moving (finite termination); no rate to fit")
    else:
        kz, lz = tz_k[pos], np.log(tz[pos])
        geo = _fit(kz, lz)
        power = _fit(np.log(kz), lz)
        r2_geo = float(geo[1])
        ratio = float(math.exp(geo[0]))
        log_ratios = np.diff(lz)
        collapsing = len(log_ratios) >= 2 and log_ratios[-1] < log_ratios[0] + math.log(0.1) and log_ratios[-1] < math.log(0.1)
        if r2_geo >= 0.9 and ratio < 1 and r2_geo >= power[1]:
            regime = "linear"
            notes.append("geometric tail: consistent with (r-1) min(p,q) >= 1")
        elif collapsing:
            regime = "superlinear_observed"
        else:
            beta = -float(power[0])
            if beta > 0:
                e = beta / (1.0 + beta)
                r_est = 1.0 + e / params.min_order
            notes.append("power-law tail: consistent with (r-1) min(p,q) < 1")

    report = RateFitReport(
        fitted_exponent=fitted,
        theoretical_exponent=theory,
        regime=regime,
        kl_r_estimate=r_est,
        notes="; ".join(notes),
        geometric_r_squared=r2_geo,
        geometric_ratio=ratio,
    )
    if lipschitz is not None:
        env = rate_envelope(trace, params, lipschitz, F_lower)
        report.envelope_holds = env.holds
        report.envelope_violations = env.violations
        report.F_lower_used = env.F_lower
        if F_lower is None:
            report.notes += ("; " if report.notes else "") + "F* replaced by the best value on the trace"
    return report


def summability_check(
    trace: Sequence[IterationRecord],
    params: ModelParams,
    lipschitz: Tuple[float, float],
    F_lower: float,
) -> Tuple[float, float, bool]:
    """sum_k s_k^{(p+q+2)/2} <= (F(x0) - F_lower) / min_k c_k + slack.

    A negative cap (F_lower above F(x0)) is a misconfiguration and fails.
    """
    L_p, L_q = lipschitz
    e = params.descent_exponent
    recs = list(trace[1:])
    lhs = float(sum(r.step_norm**e for r in recs))
    F0 = trace[0].F_value
    consts = [descent_constant(params, r.M_p_used, r.M_q_used, L_p, L_q) for r in recs]
    if not recs:
        c = descent_constant(params, trace[0].M_p_used, trace[0].M_q_used, L_p, L_q)
    else:
        c = min(consts)
    if math.isnan(c):
        return lhs, math.nan, False
    cap = (F0 - F_lower) / c
    if cap < 0:
        return lhs, cap, False
    return lhs, cap, lhs <= cap + _slack(F0) / c
