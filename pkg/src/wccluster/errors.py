"""Exception types shared across the library."""


class EdgeListParseError(ValueError):
    """Raised for malformed edge-list input; carries the 1-based line number."""

    def __init__(self, message: str, line_number: int):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class ContractViolation(ValueError):
    """Raised when an input breaks a documented contract (batch shape, movement set, ...)."""
