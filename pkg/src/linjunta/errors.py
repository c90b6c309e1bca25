"""Exception types shared across the package."""

from __future__ import annotations


class LinJuntaError(Exception):
    """Base class for all package-specific errors."""


class InputError(LinJuntaError, ValueError):
    """Malformed numerical input (non-finite entries, asymmetry, shape)."""


class ParameterError(LinJuntaError, ValueError):
    """A parameter is outside its admissible range."""


class DegeneracyError(LinJuntaError, RuntimeError):
    """An input is numerically rank-deficient where full rank is required."""

    def __init__(self, message: str, singular_value: float):
        super().__init__(f"{message} (offending singular value {singular_value:.3e})")
        self.singular_value = singular_value


class GeometryError(LinJuntaError, RuntimeError):
    """A geometric precondition between subspaces is violated."""

    def __init__(self, message: str, operator_norm: float):
        super().__init__(f"{message} (operator norm {operator_norm:.6f})")
        self.operator_norm = operator_norm


class CapacityError(LinJuntaError, RuntimeError):
    """A requested computation exceeds a structural feasibility limit."""


class NetSizeError(LinJuntaError, RuntimeError):
    """Enumerating a net would exceed the configured element cap."""

    def __init__(self, message: str, cardinality: int, cap: int):
        super().__init__(f"{message} (cardinality {cardinality} exceeds cap {cap})")
        self.cardinality = cardinality
        self.cap = cap


class BudgetExceededError(LinJuntaError, RuntimeError):
    """A query budget would be exceeded.

    Carries how many queries were spent and, when available, the partial
    estimate computed before the budget ran out.
    """

    def __init__(self, message: str, queries_used: int, partial=None):
        super().__init__(f"{message} (queries used: {queries_used})")
        self.queries_used = queries_used
        self.partial = partial


class UsageError(LinJuntaError, ValueError):
    """Invalid command-line or configuration usage."""
