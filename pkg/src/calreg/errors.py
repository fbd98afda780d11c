class ShapeError(ValueError):
    """Operands disagree on domain size or label count."""


class NumericError(ValueError):
    """Non-finite input where a finite value is required."""


class DomainError(ValueError):
    """Input outside the operation's admissible range."""


class ContractViolation(RuntimeError):
    """An internal guarantee failed; signals a bug rather than bad input."""

    def __init__(self, invariant, detail=""):
        self.invariant = invariant
        msg = f"contract violated: {invariant}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)
