"""Exception hierarchy shared across the pipeline."""


class ConradError(Exception):
    """Base class for all pipeline errors."""


class InvalidInputError(ConradError):
    """Input data violates a precondition (bad values, empty mask, dim mismatch)."""


class ConfigError(ConradError):
    """A configuration value is out of its legal range or inconsistent."""


class ContractError(ConradError):
    """A cross-module contract was violated (column mismatch, wrong model kind)."""


class OutOfBoundsError(InvalidInputError):
    """A voxel coordinate lies outside the volume."""


class ConvergenceError(ConradError):
    """An iterative solver hit its iteration cap before reaching tolerance."""
