"""Exception taxonomy shared across the package."""


class PackmarketError(Exception):
    """Base class for all package-specific errors."""


class ParameterError(PackmarketError, ValueError):
    """Invalid argument, domain violation, or unmet precondition."""


class ResourceLimitError(PackmarketError):
    """An enumeration or size cap was exceeded."""


class NumericError(PackmarketError):
    """A numerical routine failed to reach its required tolerance."""


class InfeasibleError(PackmarketError):
    """No feasible price pair exists for an hour."""

    def __init__(self, hour: int, message: str):
        self.hour = hour
        super().__init__(f"hour {hour}: {message}")
