"""Exception hierarchy shared by the estimation pipeline and the harness."""


class PencilError(Exception):
    """Base error; ``stage`` names the pipeline stage that failed, if known."""

    def __init__(self, message: str, stage: str | None = None):
        super().__init__(message)
        self.stage = stage

    def with_stage(self, stage: str) -> "PencilError":
        if self.stage is None:
            self.stage = stage
        return self

    def __str__(self) -> str:
        message = super().__str__()
        return f"{self.stage}: {message}" if self.stage else message


class InvalidModelError(PencilError, ValueError):
    """Raised when a monomial-exponential model violates its invariants."""


class SizingError(PencilError, ValueError):
    """Raised when there are not enough samples for the requested matrices."""


class OrderZeroError(PencilError):
    """Raised when every singular value falls below the rank threshold."""


class KernelFailureError(PencilError):
    """Raised when a dense LAPACK kernel fails to converge."""


class DegeneratePencilError(PencilError):
    """Raised when the stacked pencil matrix is column-rank deficient."""


class IllPosedSystemError(PencilError):
    """Raised when a least-squares matrix is rank deficient."""

    def __init__(self, message: str, rank: int, stage: str | None = None):
        super().__init__(message, stage)
        self.rank = rank


class SingularPencilError(PencilError):
    """Raised when Sigma^{k0} has a diagonal entry below the sigma floor."""


class DegenerateZeroError(PencilError):
    """Raised when a recovered zero is too close to the origin for a logarithm."""


class MetricUndefinedError(PencilError):
    """Raised when a relative error would divide by a zero true value."""


class UnknownExampleError(PencilError, KeyError):
    """Raised for an unregistered example or table id."""

    def __str__(self) -> str:
        return PencilError.__str__(self)


class InputFormatError(PencilError):
    """Raised when an input sample or config file cannot be parsed."""
