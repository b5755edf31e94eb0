"""Exception types raised across the package."""


class ObsRegError(Exception):
    """Base class for domain errors (mapped to exit code 1 by the CLI)."""


class BlowUpError(ObsRegError):
    """A time integration produced non-finite coefficients."""

    def __init__(self, t: float, message: str | None = None):
        self.t = t
        super().__init__(message or f"non-finite coefficients at t={t:.17g}")


class ResolutionMismatchError(ObsRegError, ValueError):
    pass


class ConfigError(ObsRegError, ValueError):
    pass


class SnapshotFormatError(ObsRegError, ValueError):
    pass
