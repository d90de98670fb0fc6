"""Exception hierarchy shared by all modules."""


class LangevinRatesError(Exception):
    """Base class for every error raised by the toolkit."""


class InvalidParameterError(LangevinRatesError, ValueError):
    """A parameter is outside its admissible domain."""


class MissingMetadataError(LangevinRatesError, ValueError):
    """A potential lacks the analytic constant a computation needs."""

    def __init__(self, field: str, message: str | None = None):
        self.field = field
        super().__init__(message or f"potential metadata {field!r} is unknown")


class NumericalFailureError(LangevinRatesError, RuntimeError):
    """An iterative or dense numerical routine did not converge."""

    def __init__(self, message: str, iterations: int | None = None, residual: float | None = None):
        self.iterations = iterations
        self.residual = residual
        detail = []
        if iterations is not None:
            detail.append(f"iterations={iterations}")
        if residual is not None:
            detail.append(f"residual={residual:.3e}")
        super().__init__(message + (f" ({', '.join(detail)})" if detail else ""))


class DivergenceError(LangevinRatesError, FloatingPointError):
    """A trajectory left the finite region (non-finite or |coordinate| > 1e8)."""

    def __init__(self, message: str, step: int | None = None, trajectories=None):
        self.step = step
        self.trajectories = list(trajectories) if trajectories is not None else []
        super().__init__(message)


class FitFailureError(LangevinRatesError, ValueError):
    """An exponential fit precondition failed."""


class UsageError(LangevinRatesError, ValueError):
    """Malformed command-line or JSON run configuration."""

    def __init__(self, message: str, key: str | None = None):
        self.key = key
        super().__init__(message)
