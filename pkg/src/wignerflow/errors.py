"""Exception types shared across the package."""

from .quadrature import QuadratureError


class UnsupportedParameterError(ValueError):
    """The requested evaluator does not cover these parameters."""


class EvaluationError(RuntimeError):
    """A field evaluation failed; carries the offending phase-space location."""

    def __init__(self, message: str, x=None, k=None, tau=None):
        where = []
        if x is not None:
            where.append(f"x={x:.17g}")
        if k is not None:
            where.append(f"k={k:.17g}")
        if tau is not None:
            where.append(f"tau={tau:.17g}")
        if where:
            message = f"{message} at ({', '.join(where)})"
        super().__init__(message)
        self.x, self.k, self.tau = x, k, tau


class SingularityError(ValueError):
    """Evaluation at the inverse-square singularity x = 0."""


class BracketError(ValueError):
    """Root bracket does not enclose a sign change."""


__all__ = ["QuadratureError", "UnsupportedParameterError", "EvaluationError", "SingularityError",
           "BracketError"]
