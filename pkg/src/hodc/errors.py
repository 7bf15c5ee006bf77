"""Exception types raised by the solver library."""


class InputError(ValueError):
    """Bad arguments: wrong dimension, unknown name, out-of-range parameter."""


class OracleError(RuntimeError):
    """A user oracle raised while being evaluated at an in-domain point."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class CapabilityError(NotImplementedError):
    """The requested (p, q, psi) combination has no certified subproblem solver."""


class NumericalError(ArithmeticError):
    """A linear-algebra kernel failed (e.g. eigendecomposition did not converge)."""
