from typing import Optional


class ConleyIFSError(Exception):
    """Root of every error raised by the toolkit."""


class ConfigurationError(ConleyIFSError, ValueError):
    """Invalid space bounds, resolutions, matrices, presets or render settings."""


class DomainError(ConleyIFSError, ValueError):
    """A point is not a canonical point of its space (e.g. zero homogeneous vector)."""

    def __init__(self, message: str, index: Optional[int] = None):
        super().__init__(message)
        self.index = index


class GridMismatchError(ConleyIFSError, ValueError):
    """Two cell sets over different grids were combined."""


class CapabilityError(ConleyIFSError):
    """The operation needs an inverse that some map does not have."""


class ContractError(ConleyIFSError):
    """A documented precondition does not hold; `report` explains why."""

    def __init__(self, message: str, report: object = None):
        super().__init__(message)
        self.report = report


class BlockNotFoundError(ConleyIFSError):
    """No attractor block for the given set exists at this grid resolution."""

    def __init__(self, message: str, diagnostic: Optional[dict] = None):
        super().__init__(message)
        self.diagnostic = diagnostic or {}
