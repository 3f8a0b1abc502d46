"""Exception hierarchy shared by the library and the CLI."""


class CVQKDError(Exception):
    """Base class for all library errors."""


class DomainError(CVQKDError, ValueError):
    """A parameter lies outside its admissible range."""


class ShapeError(DomainError):
    """A covariance matrix has the wrong shape or is not symmetric."""


class SingularMappingError(DomainError):
    """The prepare-and-measure to EPR mapping is singular (zero displacement)."""


class PhysicalityError(CVQKDError, ValueError):
    """A covariance matrix violates the uncertainty principle."""


class DegenerateMeasurementError(CVQKDError, ValueError):
    """The measured quadrature has non-positive variance."""


class UnsupportedConfigurationError(CVQKDError, ValueError):
    """The requested combination of options is not supported."""
