"""Problem oracles for F(x) = f(x) + psi(x) - g(x).

``f`` and ``g`` are smooth convex functions exposed through derivative
oracles (value, gradient, hessian, directional third derivative).  ``psi``
is a simple convex term exposed through its value and proximal map.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence

import numpy as np
from scipy.special import logsumexp, softmax

from .errors import InputError, OracleError

__all__ = [
    "SmoothOracle",
    "SimpleConvexTerm",
    "DcProblem",
    "DerivativeReport",
    "zero_term",
    "l1_term",
    "nonneg_indicator",
    "quadratic_oracle",
    "log_sum_exp_oracle",
    "evaluate_objective",
    "fd_step",
    "check_derivatives",
    "make_quad_minus_quad",
    "make_lasso_minus_concave",
    "make_lse_minus_lse",
    "make_poly_dc",
    "builtin_problem",
    "BUILTIN_PROBLEMS",
]


@dataclass(frozen=True)
class SmoothOracle:
    """Derivative oracle of a smooth convex function.

    ``third(x, h)`` returns the symmetric matrix D^3 phi(x)[h].  ``lipschitz``
    maps a derivative order to a valid Lipschitz constant of that derivative.
    """

    value: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    hessian: Optional[Callable[[np.ndarray], np.ndarray]] = None
    third: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    lipschitz: Mapping[int, float] = field(default_factory=dict)

    @property
    def order(self) -> int:
        if self.hessian is None:
            return 1
        if self.third is None:
            return 2
        return 3

    def lipschitz_hint(self, order: int) -> Optional[float]:
        return self.lipschitz.get(order)


@dataclass(frozen=True)
class SimpleConvexTerm:
    """Convex term handled through its proximal map.

    ``prox(x, t)`` returns argmin_u psi(u) + ||u - x||^2 / (2 t).
    """

    value: Callable[[np.ndarray], float]
    prox: Callable[[np.ndarray, float], np.ndarray]
    contains: Callable[[np.ndarray], bool] = lambda x: True
    is_zero: bool = False
    name: str = "custom"


def zero_term() -> SimpleConvexTerm:
    return SimpleConvexTerm(
        value=lambda x: 0.0,
        prox=lambda x, t: np.array(x, dtype=float),
        is_zero=True,
        name="zero",
    )


def l1_term(lam: float) -> SimpleConvexTerm:
    """psi(x) = lam * ||x||_1, prox is soft thresholding."""
    if lam < 0:
        raise InputError(f"l1 weight must be nonnegative, got {lam}")

    def prox(x, t):
        x = np.asarray(x, dtype=float)
        return np.sign(x) * np.maximum(np.abs(x) - lam * t, 0.0)

    return SimpleConvexTerm(
        value=lambda x: lam * float(np.sum(np.abs(x))),
        prox=prox,
        is_zero=lam == 0,
        name=f"l1({lam:g})",
    )


def nonneg_indicator() -> SimpleConvexTerm:
    """Indicator of the nonnegative orthant; prox is the projection."""

    def contains(x):
        return bool(np.all(np.asarray(x) >= 0))

    return SimpleConvexTerm(
        value=lambda x: 0.0 if contains(x) else math.inf,
        prox=lambda x, t: np.maximum(np.asarray(x, dtype=float), 0.0),
        contains=contains,
        name="nonneg",
    )


@dataclass(frozen=True)
class DcProblem:
    f: SmoothOracle
    g: SmoothOracle
    psi: SimpleConvexTerm
    n: int
    known_lower_bound: Optional[float] = None
    # Lipschitz hints are only guaranteed on the box ||x||_inf <= region_radius.
    region_radius: Optional[float] = None
    name: str = "custom"

    def objective(self, x) -> float:
        return evaluate_objective(self, x)


def _as_point(problem: DcProblem, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (problem.n,):
        raise InputError(f"expected a vector of length {problem.n}, got shape {x.shape}")
    return x


def evaluate_objective(problem: DcProblem, x) -> float:
    """Return f(x) + psi(x) - g(x), or +inf outside dom psi."""
    x = _as_point(problem, x)
    if not problem.psi.contains(x):
        return math.inf
    return float(problem.f.value(x)) + float(problem.psi.value(x)) - float(problem.g.value(x))


# ---------------------------------------------------------------------------
# oracle builders


def quadratic_oracle(A, b=None, c: float = 0.0) -> SmoothOracle:
    """phi(x) = 0.5 x^T A x - b^T x + c with A symmetric positive semidefinite."""
    A = np.array(A, dtype=float)
    n = A.shape[0]
    b = np.zeros(n) if b is None else np.array(b, dtype=float)
    zeros = np.zeros((n, n))
    lam_max = float(np.linalg.eigvalsh(A)[-1]) if n else 0.0
    return SmoothOracle(
        value=lambda x: 0.5 * float(x @ A @ x) - float(b @ x) + c,
        gradient=lambda x: A @ x - b,
        hessian=lambda x: A.copy(),
        third=lambda x, h: zeros.copy(),
        lipschitz={1: max(lam_max, 0.0), 2: 0.0, 3: 0.0},
    )


def log_sum_exp_oracle(A) -> SmoothOracle:
    """phi(x) = log(sum_i exp(<a_i, x>)) with the a_i the rows of A.

    Hints use ||A||_2: L1 <= ||A||^2, L2 <= 2 ||A||^3, L3 <= 4 ||A||^4.
    """
    A = np.array(A, dtype=float)
    if A.ndim != 2:
        raise InputError("log-sum-exp data must be a 2-D array of rows a_i")
    norm_a = float(np.linalg.norm(A, 2))

    def value(x):
        return float(logsumexp(A @ x))

    def gradient(x):
        return A.T @ softmax(A @ x)

    def hessian(x):
        s = softmax(A @ x)
        H = A.T @ ((s[:, None] * A)) - np.outer(A.T @ s, A.T @ s)
        return 0.5 * (H + H.T)

    def third(x, h):
        s = softmax(A @ x)
        u = A @ h
        ds = s * (u - s @ u)
        D = np.diag(ds) - np.outer(ds, s) - np.outer(s, ds)
        T = A.T @ D @ A
        return 0.5 * (T + T.T)

    return SmoothOracle(
        value=value,
        gradient=gradient,
        hessian=hessian,
        third=third,
        lipschitz={1: norm_a**2, 2: 2.0 * norm_a**3, 3: 4.0 * norm_a**4},
    )


# ---------------------------------------------------------------------------
# finite-difference validation


def fd_step(x) -> float:
    return max(1e-6, 1e-6 * float(np.linalg.norm(x)))


@dataclass
class DerivativeReport:
    max_rel_error: dict
    worst_point: dict
    tol: float
    passed: bool


def _call(fn, x, *args):
    try:
        return fn(x, *args)
    except Exception as exc:  # noqa: BLE001 - rewrapped with the offending point
        raise OracleError(f"oracle raised at x={np.array2string(np.asarray(x))}: {exc!r}", point=x) from exc


def _rel(exact, approx) -> float:
    exact = np.asarray(exact, dtype=float)
    approx = np.asarray(approx, dtype=float)
    return float(np.linalg.norm(exact - approx) / max(1.0, np.linalg.norm(approx)))


def check_derivatives(oracle: SmoothOracle, points: Sequence, tol: float, directions: int = 3) -> DerivativeReport:
    """Compare each derivative order against central differences of the order below.

    Third derivatives are checked along ``directions`` fixed random unit vectors.
    """
    if tol <= 0:
        raise InputError("tol must be positive")
    errors = {k: 0.0 for k in range(1, oracle.order + 1)}
    worst = {k: None for k in errors}
    rng = np.random.default_rng(0)

    def record(order, err, x):
        if err >= errors[order]:
            errors[order] = err
            worst[order] = np.array(x)

    for x in points:
        x = np.asarray(x, dtype=float)
        n = x.size
        h = fd_step(x)
        eye = np.eye(n)

        g = _call(oracle.gradient, x)
        fd_g = np.array([
            (_call(oracle.value, x + h * e) - _call(oracle.value, x - h * e)) / (2 * h) for e in eye
        ])
        record(1, _rel(g, fd_g), x)

        if oracle.order >= 2:
            H = _call(oracle.hessian, x)
            fd_H = np.column_stack([
                (_call(oracle.gradient, x + h * e) - _call(oracle.gradient, x - h * e)) / (2 * h) for e in eye
            ])
            err = _rel(H, fd_H)
            if np.max(np.abs(H - H.T), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(H), initial=0.0)):
                err = max(err, math.inf)
            record(2, err, x)

        if oracle.order >= 3:
            for _ in range(directions):
                d = rng.standard_normal(n)
                d /= np.linalg.norm(d)
                T = _call(oracle.third, x, d)
                fd_T = (_call(oracle.hessian, x + h * d) - _call(oracle.hessian, x - h * d)) / (2 * h)
                record(3, _rel(T, fd_T), x)

    passed = all(e <= tol for e in errors.values())
    return DerivativeReport(max_rel_error=errors, worst_point=worst, tol=tol, passed=passed)


# ---------------------------------------------------------------------------
# builtin problems


def make_quad_minus_quad(A, b, mu: float) -> DcProblem:
    """f = 0.5 x^T A x - b^T x, g = (mu/2) ||x||^2, psi = 0."""
    A = np.array(A, dtype=float)
    b = np.array(b, dtype=float)
    n = A.shape[0]
    f = quadratic_oracle(A, b)
    g = quadratic_oracle(mu * np.eye(n))
    lower = None
    shifted = A - mu * np.eye(n)
    if np.linalg.eigvalsh(shifted)[0] > 0:
        x_star = np.linalg.solve(shifted, b)
        lower = -0.5 * float(b @ x_star)
    return DcProblem(f=f, g=g, psi=zero_term(), n=n, known_lower_bound=lower, name="quad_minus_quad")


def make_lasso_minus_concave(A, b, mu: float, lam: float) -> DcProblem:
    """f = 0.5 ||Ax - b||^2, g = (mu/2) ||x||^2, psi = lam ||x||_1."""
    A = np.array(A, dtype=float)
    b = np.array(b, dtype=float)
    n = A.shape[1]
    AtA = A.T @ A
    f = quadratic_oracle(AtA, A.T @ b, 0.5 * float(b @ b))
    g = quadratic_oracle(mu * np.eye(n))
    lower = None
    shifted = AtA - mu * np.eye(n)
    if np.linalg.eigvalsh(shifted)[0] > 0:
        # psi >= 0, so the minimum of the smooth part is a valid lower bound
        z = np.linalg.solve(shifted, A.T @ b)
        lower = 0.5 * float(b @ b) - 0.5 * float((A.T @ b) @ z)
    return DcProblem(f=f, g=g, psi=l1_term(lam), n=n, known_lower_bound=lower, name="lasso_minus_concave")


def make_lse_minus_lse(A, B) -> DcProblem:
    """f = lse(Ax), g = lse(Bx).

    When each row of B is a scaled convex combination of rows of A (scale <= 1)
    and 0 lies in the convex hull of the rows of A, F >= -log(#rows of B).
    """
    A = np.array(A, dtype=float)
    B = np.array(B, dtype=float)
    return DcProblem(
        f=log_sum_exp_oracle(A),
        g=log_sum_exp_oracle(B),
        psi=zero_term(),
        n=A.shape[1],
        known_lower_bound=-math.log(B.shape[0]),
        name="lse_minus_lse",
    )


def make_poly_dc(n: int, radius: float = 4.0) -> DcProblem:
    """f = sum x_i^4 / 12, g = ||x||^2.

    Hints for f at orders 1 and 2 hold on the box ||x||_inf <= radius.
    """

    def f_third(x, h):
        return np.diag(2.0 * x * h)

    f = SmoothOracle(
        value=lambda x: float(np.sum(x**4)) / 12.0,
        gradient=lambda x: x**3 / 3.0,
        hessian=lambda x: np.diag(x**2),
        third=f_third,
        lipschitz={1: radius**2, 2: 2.0 * radius, 3: 2.0},
    )
    g = quadratic_oracle(2.0 * np.eye(n))
    return DcProblem(
        f=f,
        g=g,
        psi=zero_term(),
        n=n,
        known_lower_bound=-3.0 * n,
        region_radius=radius,
        name="poly_dc",
    )


def _quad_data(n, rng):
    G = rng.standard_normal((n, n))
    A = G.T @ G / n + 0.5 * np.eye(n)
    b = rng.standard_normal(n)
    mu = 0.5 * float(np.linalg.eigvalsh(A)[0])
    return A, b, mu


def _builtin_quad(n, seed):
    A, b, mu = _quad_data(n, np.random.default_rng(seed))
    return make_quad_minus_quad(A, b, mu)


def _builtin_lasso(n, seed):
    rng = np.random.default_rng(seed)
    m = 2 * n + 2
    A = rng.standard_normal((m, n)) / math.sqrt(m)
    b = rng.standard_normal(m)
    mu = 0.5 * float(np.linalg.eigvalsh(A.T @ A)[0])
    lam = 0.1 * float(np.max(np.abs(A.T @ b)))
    return make_lasso_minus_concave(A, b, mu, lam)


def _builtin_lse(n, seed):
    rng = np.random.default_rng(seed)
    eye = np.eye(n)
    R = rng.standard_normal((n, n)) / math.sqrt(n)
    A = np.vstack([eye, -eye, R])
    weights = rng.dirichlet(np.ones(A.shape[0]), size=n)
    B = 0.5 * weights @ A
    return make_lse_minus_lse(A, B)


def _builtin_poly(n, seed):
    return make_poly_dc(n)


BUILTIN_PROBLEMS = {
    "quad_minus_quad": _builtin_quad,
    "lasso_minus_concave": _builtin_lasso,
    "lse_minus_lse": _builtin_lse,
    "poly_dc": _builtin_poly,
}

_PSI_OVERRIDES = {
    "zero": zero_term,
    "nonneg": nonneg_indicator,
}


def builtin_problem(name: str, n: int, seed: int = 0, psi: Optional[str] = None) -> DcProblem:
    """Reproducible test problem by name.

    ``psi`` optionally replaces the simple term with ``"zero"`` or ``"nonneg"``.
    Every builtin lower bound ignores psi >= 0, so it survives the swap.
    """
    if name not in BUILTIN_PROBLEMS:
        raise InputError(f"unknown problem {name!r}; available: {', '.join(sorted(BUILTIN_PROBLEMS))}")
    if int(n) < 1:
        raise InputError(f"n must be >= 1, got {n}")
    problem = BUILTIN_PROBLEMS[name](int(n), int(seed))
    if psi is not None:
        if psi not in _PSI_OVERRIDES:
            raise InputError(f"unknown psi override {psi!r}; available: {', '.join(_PSI_OVERRIDES)}")
        problem = DcProblem(
            f=problem.f,
            g=problem.g,
            psi=_PSI_OVERRIDES[psi](),
            n=problem.n,
            known_lower_bound=problem.known_lower_bound,
            region_radius=problem.region_radius,
            name=f"{name}+{psi}",
        )
    return problem
