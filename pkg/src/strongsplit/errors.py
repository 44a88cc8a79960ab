"""Exception hierarchy shared by every module of the package."""


class StrongSplitError(Exception):
    """Base class for all library errors."""


class DimensionError(StrongSplitError, ValueError):
    """Vectors or maps that live on different spaces were combined."""


class DomainError(StrongSplitError, ValueError):
    """A scalar argument lies outside the admissible range."""


class ScheduleError(StrongSplitError, ValueError):
    """A parameter sequence violates the bounds required by a scheme."""


class CertificateRejected(StrongSplitError, ValueError):
    """Step sizes fail the convergence condition of a primal-dual scheme.

    ``value`` holds the computed left-hand side so callers can report it.
    """

    def __init__(self, message, value=None):
        super().__init__(message)
        self.value = value


class ConfigurationError(StrongSplitError, ValueError):
    """A problem, certificate and solver were combined inconsistently."""


class EstimateFailed(StrongSplitError, RuntimeError):
    """Power iteration did not settle within the iteration budget."""

    def __init__(self, message, estimate, iterate):
        super().__init__(message)
        self.estimate = estimate
        self.iterate = iterate
