"""Exception types raised by curvknap."""


class CurvKnapError(Exception):
    """Base class for all library errors."""


class DomainError(CurvKnapError, ValueError):
    """An argument lies outside the domain an operation accepts."""


class CapabilityError(CurvKnapError):
    """The request is well formed but exceeds what the chosen method can do
    (e.g. exhaustive checks on a ground set that is too large)."""


class BudgetExceededError(CapabilityError):
    """Guess enumeration would exceed the configured profile budget."""


class NotSubmodularError(CurvKnapError):
    """An oracle violated monotonicity or diminishing returns."""
