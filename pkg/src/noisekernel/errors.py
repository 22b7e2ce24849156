"""Exception types shared across the package."""


class NoiseKernelError(Exception):
    """Base class for all package-specific errors."""


class ScheduleValidityError(NoiseKernelError, ValueError):
    """A noise schedule violates the validity condition for the kernel's w."""


class DomainError(NoiseKernelError, ValueError):
    """An argument is outside its mathematical domain (e.g. beta <= 0)."""


class ShapeError(NoiseKernelError, ValueError):
    """Array shapes do not agree."""


class DataFormatError(NoiseKernelError, ValueError):
    """A dataset file is malformed. Carries the byte offset when known."""

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class DataValidationError(NoiseKernelError, ValueError):
    """Dataset contents violate an invariant (e.g. category out of range)."""


class IntegrityError(NoiseKernelError, IOError):
    """A checkpoint file is truncated or corrupt."""


class VersionError(NoiseKernelError, IOError):
    """A checkpoint was written with an unknown format version."""


class CapacityError(NoiseKernelError, ValueError):
    """An enumeration-based instrument was asked for a state space too large."""


class ImpossibleTransitionError(NoiseKernelError, RuntimeError):
    """A log-probability was requested for a zero-probability transition."""


class ConfigError(NoiseKernelError, ValueError):
    """A run configuration is invalid or self-inconsistent."""


class ConvergenceError(NoiseKernelError, RuntimeError):
    """An iterative computation failed to converge. Carries the last residual."""

    def __init__(self, message: str, residual: float | None = None):
        if residual is not None:
            message = f"{message} (last residual {residual:.3e})"
        super().__init__(message)
        self.residual = residual
