"""Shared exception types."""


class EnumerationLimitError(Exception):
    """Raised when an exact enumeration would exceed its size guard.

    Exact checkers and oracles refuse oversized inputs instead of silently
    falling back to sampling.
    """


class NoCompactPolytopeError(Exception):
    """Raised when a constraint family has no materialized inequality description."""


class LpStallError(Exception):
    """Raised when the simplex solver exceeds its iteration cap."""

    def __init__(self, iterations: int, objective: float):
        super().__init__(
            f"simplex stalled after {iterations} iterations (objective {objective:.6g})"
        )
        self.iterations = iterations
        self.objective = objective
