"""Custom exceptions for sbp-freesurface."""


class SbpFreeSurfaceError(Exception):
    """Base exception for all sbp-freesurface errors."""
    pass


class ConfigurationError(SbpFreeSurfaceError):
    """Raised when configuration is invalid."""
    pass


class OperatorSizeError(SbpFreeSurfaceError):
    """Raised when an operator set is requested with too few grid points."""
    pass


class OperatorStructureError(SbpFreeSurfaceError):
    """Raised when an operator set lacks the structure an operation needs."""
    pass


class AccuracyError(SbpFreeSurfaceError):
    """Raised when a difference stencil misses its polynomial exactness contract."""
    pass


class AssemblyError(SbpFreeSurfaceError):
    """Raised when a semi-discrete system cannot be assembled."""
    pass


class SourceError(SbpFreeSurfaceError):
    """Raised when a source or receiver is placed off its grid or on a constrained point."""
    pass


class BlowUpError(SbpFreeSurfaceError):
    """Raised when a simulation produces non-finite or runaway values."""

    def __init__(self, message: str, step: int = -1, max_abs: float = float("nan")):
        super().__init__(message)
        self.step = step
        self.max_abs = max_abs


class EigensolverError(SbpFreeSurfaceError):
    """Raised when an eigenvalue computation fails or is inaccurate."""
    pass
