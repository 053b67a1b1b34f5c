class DomainError(ValueError):
    """Raised when an argument lies outside the mathematical domain of an operation."""


class ConfigurationError(ValueError):
    """
    Raised when a run or grid configuration cannot be executed.

    Attributes:
        details (dict): Optional payload for the caller (per-slab diagnostics,
            a suggested grid, ...). Written to the diagnostics report.
    """

    def __init__(self, message: str, details: dict | None = None):
        super().__init__(message)
        self.details = details or {}


class NumericalError(ArithmeticError):
    """Raised when a computation leaves its numerically valid range."""


class PhysicalityWarning(RuntimeWarning):
    """Emitted when a state violates the uncertainty principle within Monte Carlo tolerance."""


class ConfigValidationError(ValueError):
    """
    Raised when a run configuration fails schema validation.

    Attributes:
        violations (list[str]): Every violation found, in schema order.
    """

    def __init__(self, violations: list[str]):
        super().__init__(f"Run configuration has {len(violations)} violation(s): " + "; ".join(violations))
        self.violations = list(violations)
