"""Exception types shared across the package."""


class TopospectraError(Exception):
    """Base class for all package errors."""


class DomainError(TopospectraError):
    """A point lies outside the allowed region or hits a singularity."""


class DimensionError(TopospectraError, ValueError):
    """Array or system dimensions do not match."""


class SolveError(TopospectraError):
    """A root-finding or extrapolation step could not be completed."""


class ConfigError(TopospectraError):
    """Invalid run configuration.

    Carries a list of (line_number, message) pairs; line_number is None for
    errors that are not tied to a specific line.
    """

    def __init__(self, issues):
        self.issues = list(issues)
        lines = "; ".join(
            f"line {ln}: {msg}" if ln is not None else msg for ln, msg in self.issues
        )
        super().__init__(lines or "invalid configuration")
