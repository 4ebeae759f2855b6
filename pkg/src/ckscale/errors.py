"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the region where an operation is defined."""


class StructuralError(ValueError):
    """An operator expression has the wrong shape for the requested use."""


class ConfigurationError(ValueError):
    """A sampling plan, grid or solver configuration is unusable."""


class FrameViolation(DomainError):
    """A time horizon or grid point leaves the existence triangle."""
