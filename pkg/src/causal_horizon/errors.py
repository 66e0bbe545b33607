"""Shared exception types."""


class CausalHorizonError(Exception):
    """Base class for package errors."""


class DomainError(CausalHorizonError, ValueError):
    """An input lies outside the mathematical domain of a calculator."""


class PastSingularityError(CausalHorizonError):
    """A field was evaluated at or beyond its finite-time singularity."""

    def __init__(self, t: float, t_singular: float):
        self.t = t
        self.t_singular = t_singular
        super().__init__(
            f"field evaluated at t={t:.6g}, at or past its singularity t={t_singular:.6g}"
        )


class NumericalInstabilityError(CausalHorizonError):
    """An integrator produced a non-finite value before a tracked threshold.

    Carries the partial trace accumulated so far in ``partial``.
    """

    def __init__(self, message: str, partial=None):
        self.partial = partial
        super().__init__(message)


class TrainingError(CausalHorizonError):
    """Field surrogate training failed its contract."""


class TrainingDivergedError(TrainingError):
    """Training produced non-finite weights or loss."""


class IngestError(CausalHorizonError, ValueError):
    """A point-cloud file could not be ingested.  Collects offending rows."""

    def __init__(self, message: str, bad_rows=()):
        self.bad_rows = list(bad_rows)
        super().__init__(message)


class UsageError(CausalHorizonError, ValueError):
    """Bad command line or config-file input; names the offending key."""
