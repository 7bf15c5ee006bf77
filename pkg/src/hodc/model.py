"""Taylor approximations and the regularized DC surrogate.

For an anchor x the surrogate is

    m(y; x) = T_p^f(y; x) + M_p/(p+1)! ||y-x||^{p+1} + psi(y)
              - T_q^g(y; x) + M_q/(q+1)! ||y-x||^{q+1}

which majorizes F when M_p, M_q exceed the Lipschitz constants of the
p-th derivative of f and the q-th derivative of g.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import InputError
from .oracles import DcProblem, SimpleConvexTerm, SmoothOracle, evaluate_objective

__all__ = [
    "ModelParams",
    "TaylorData",
    "ModelAnchor",
    "taylor_value",
    "taylor_gradient",
    "surrogate_value",
    "surrogate_smooth_value",
    "surrogate_gradient_smooth_part",
]


@dataclass(frozen=True)
class ModelParams:
    p: int
    q: int
    M_p: float
    M_q: float
    theta: float = 0.1

    def __post_init__(self):
        for name in ("p", "q"):
            if getattr(self, name) not in (1, 2, 3):
                raise InputError(f"{name} must be 1, 2 or 3, got {getattr(self, name)}")
        if not (self.M_p > 0 and self.M_q > 0):
            raise InputError(f"M_p and M_q must be positive, got {self.M_p}, {self.M_q}")
        if self.theta < 0:
            raise InputError(f"theta must be nonnegative, got {self.theta}")

    @property
    def min_order(self) -> int:
        return min(self.p, self.q)

    @property
    def descent_exponent(self) -> float:
        return (self.p + self.q + 2) / 2.0

    def with_regularization(self, M_p: float, M_q: float) -> "ModelParams":
        return ModelParams(self.p, self.q, M_p, M_q, self.theta)

    def check_convexity_preserving(self, lipschitz_f: Optional[float]) -> None:
        """For p = 3 the regularized f-model is convex only if M_p >= 3 L_3^f."""
        if self.p == 3:
            if lipschitz_f is None:
                raise InputError("convexity check for p = 3 needs a Lipschitz hint for D^3 f")
            if self.M_p < 3 * lipschitz_f:
                raise InputError(f"M_p = {self.M_p} < 3 L_3^f = {3 * lipschitz_f}; the f-model may be nonconvex")


@dataclass(frozen=True)
class TaylorData:
    """Derivatives of one smooth function cached at the anchor."""

    order: int
    value: float
    gradient: np.ndarray
    hessian: Optional[np.ndarray] = None
    third: Optional[Callable[[np.ndarray], np.ndarray]] = None

    @classmethod
    def build(cls, oracle: SmoothOracle, x: np.ndarray, order: int) -> "TaylorData":
        if order > oracle.order:
            raise InputError(f"oracle provides derivatives up to order {oracle.order}, {order} requested")
        value = float(oracle.value(x))
        grad = np.array(oracle.gradient(x), dtype=float)
        hess = None
        third = None
        if order >= 2:
            hess = np.array(oracle.hessian(x), dtype=float)
            hess.setflags(write=False)
        if order >= 3:
            x_fixed = x.copy()
            third = lambda h: np.asarray(oracle.third(x_fixed, h), dtype=float)  # noqa: E731
        grad.setflags(write=False)
        return cls(order, value, grad, hess, third)

    def value_at(self, d: np.ndarray, order: int) -> float:
        out = self.value
        if order >= 1:
            out += float(self.gradient @ d)
        if order >= 2:
            out += 0.5 * float(d @ self.hessian @ d)
        if order >= 3:
            out += float(d @ self.third(d) @ d) / 6.0
        return out

    def gradient_at(self, d: np.ndarray, order: int) -> np.ndarray:
        out = self.gradient.copy()
        if order >= 2:
            out += self.hessian @ d
        if order >= 3:
            out += 0.5 * self.third(d) @ d
        return out


@dataclass(frozen=True)
class ModelAnchor:
    """Point x with f and g derivative data cached to orders (p_cached, q_cached).

    Built once per outer iteration and reused across regularization changes.
    """

    x: np.ndarray
    f_data: TaylorData
    g_data: TaylorData
    F_value: float

    @classmethod
    def build(cls, problem: DcProblem, x, p: int, q: int) -> "ModelAnchor":
        x = np.array(x, dtype=float)
        if x.shape != (problem.n,):
            raise InputError(f"expected a vector of length {problem.n}, got shape {x.shape}")
        x.setflags(write=False)
        f_data = TaylorData.build(problem.f, x, p)
        g_data = TaylorData.build(problem.g, x, q)
        return cls(x, f_data, g_data, evaluate_objective(problem, x))

    def data(self, which: str) -> TaylorData:
        if which == "f":
            return self.f_data
        if which == "g":
            return self.g_data
        raise InputError(f"which must be 'f' or 'g', got {which!r}")


def taylor_value(anchor: ModelAnchor, which: str, order: int, y) -> float:
    """phi(x) + sum_{i<=order} D^i phi(x)[y-x]^i / i!"""
    data = anchor.data(which)
    if not 0 <= order <= data.order:
        raise InputError(f"order {order} exceeds cached order {data.order} for {which}")
    return data.value_at(np.asarray(y, dtype=float) - anchor.x, order)


def taylor_gradient(anchor: ModelAnchor, which: str, order: int, y) -> np.ndarray:
    data = anchor.data(which)
    if not 1 <= order <= data.order:
        raise InputError(f"order {order} exceeds cached order {data.order} for {which}")
    return data.gradient_at(np.asarray(y, dtype=float) - anchor.x, order)


def _check_orders(anchor: ModelAnchor, params: ModelParams):
    if anchor.f_data.order < params.p or anchor.g_data.order < params.q:
        raise InputError(
            f"anchor caches orders ({anchor.f_data.order}, {anchor.g_data.order}), "
            f"model needs ({params.p}, {params.q})"
        )


def surrogate_smooth_value(anchor: ModelAnchor, params: ModelParams, y) -> float:
    """The surrogate without psi (the smooth part T_{p,q})."""
    _check_orders(anchor, params)
    d = np.asarray(y, dtype=float) - anchor.x
    r = float(np.linalg.norm(d))
    p, q = params.p, params.q
    return (
        anchor.f_data.value_at(d, p)
        + params.M_p / math.factorial(p + 1) * r ** (p + 1)
        - anchor.g_data.value_at(d, q)
        + params.M_q / math.factorial(q + 1) * r ** (q + 1)
    )


def surrogate_value(anchor: ModelAnchor, params: ModelParams, psi: SimpleConvexTerm, y) -> float:
    y = np.asarray(y, dtype=float)
    if not psi.contains(y):
        return math.inf
    return surrogate_smooth_value(anchor, params, y) + float(psi.value(y))


def surrogate_gradient_smooth_part(anchor: ModelAnchor, params: ModelParams, y) -> np.ndarray:
    """Gradient in y of the smooth part; the regularizer gradient is 0 at y = x."""
    _check_orders(anchor, params)
    d = np.asarray(y, dtype=float) - anchor.x
    r = float(np.linalg.norm(d))
    p, q = params.p, params.q
    grad = anchor.f_data.gradient_at(d, p) - anchor.g_data.gradient_at(d, q)
    if r > 0:
        grad += (params.M_p / math.factorial(p) * r ** (p - 1) + params.M_q / math.factorial(q) * r ** (q - 1)) * d
    return grad
