"""Exception hierarchy shared by the solvers and the CLI."""


class LDMError(Exception):
    """Base class for all errors raised by :mod:`ldm`."""


class ParameterError(LDMError, ValueError):
    """An argument is outside the range an operation accepts."""


class DimensionError(ParameterError):
    """Operands have incompatible matrix dimensions."""


class DegenerateProblemError(LDMError):
    """The occupied and unoccupied spectra are not separated by a gap."""


class ConstraintViolationError(LDMError):
    """A matrix violates a spectral constraint such as 0 <= P <= I."""


class ConfigurationError(LDMError, ValueError):
    """A solver configuration is inconsistent or unsupported."""
