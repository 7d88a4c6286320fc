"""Exception types shared across the package."""


class BNInputError(ValueError):
    """Bad user input: out-of-range symbols, mismatched nets, bad flags."""


class ParseError(BNInputError):
    """Malformed net document. ``location`` is a JSON-path-like string."""

    def __init__(self, message, location="$"):
        super().__init__(f"{location}: {message}")
        self.location = location


class BudgetExceededError(RuntimeError):
    """Raised by the exact oracle instead of silently truncating enumeration."""


class ContractViolation(RuntimeError):
    """An internal precondition that should be impossible on valid input failed."""
