"""Exception hierarchy shared across the package."""

from __future__ import annotations


class CEGameError(Exception):
    """Base class for all package-specific failures."""


class ValidationError(CEGameError):
    """A game (or direct numeric input) violates a model invariant."""

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


class UnsupportedInstanceError(CEGameError):
    """The instance falls outside the tractable class handled by a solver."""


class InfeasibleFlowError(CEGameError):
    """A flow saturating the required edges does not exist."""


class NegativeCycleError(CEGameError):
    """Shortest-path relaxation found a negative-cost cycle."""


class SolverFailure(CEGameError):
    """Base class for Nash-solver failures; carries the iteration trace."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = list(trace) if trace is not None else []


class NumericDegeneracyError(SolverFailure):
    """Progress stalled below tolerance for several consecutive iterations."""


class IterationLimitError(SolverFailure):
    """The solver exceeded its iteration budget."""


class InvariantViolationError(SolverFailure):
    """A per-step solver invariant check failed (test builds only)."""


class GameFileError(CEGameError):
    """A game or spec document could not be parsed."""
