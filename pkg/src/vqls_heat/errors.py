"""Exception types raised across the package."""

from __future__ import annotations


class SizeError(ValueError):
    """Qubit count, vector length, or matrix shape does not fit the operation."""


class DegenerateStateError(ArithmeticError):
    """A normalising quantity (e.g. <Phi|Phi>) is numerically zero."""


class SingularMatrixError(ArithmeticError):
    """Matrix is singular to working precision."""


class NumericalFailure(ArithmeticError):
    """Optimizer produced a non-finite cost or gradient."""

    def __init__(self, message: str, iteration: int):
        super().__init__(f"{message} (iteration {iteration})")
        self.iteration = iteration


class NotConvergedError(RuntimeError):
    """A solve that a downstream step depends on did not reach its threshold."""
