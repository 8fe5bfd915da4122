"""Exception types shared across the package."""


class EmpLDPError(Exception):
    """Base class for computation-domain failures (CLI exit code 1)."""


class DomainError(EmpLDPError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class SingularityError(DomainError):
    """A kernel 1/(1 - F) would be evaluated where F = 1."""


class FlatRegionError(DomainError):
    """F is constant on an interval containing the requested level."""

    def __init__(self, level, interval):
        self.level = level
        self.interval = interval
        super().__init__(
            f"F is flat at level {level!r} on [{interval[0]!r}, {interval[1]!r}]; quantile undefined"
        )
