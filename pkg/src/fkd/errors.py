"""Shared exception types."""


class ConvergenceError(RuntimeError):
    """An iterative scheme failed to settle within its depth/iteration cap."""


class BracketError(RuntimeError):
    """A root bracket does not straddle a sign change."""


class DegenerateDomainError(ValueError):
    """A perturbed domain stopped being star-shaped (radius touched zero)."""


class IndefiniteOperatorError(RuntimeError):
    """The discretized operator lost positivity; the domain is invalid."""
