"""Exception types shared across the package.

Every error raised deliberately by the library derives from ElastonetError,
so callers (and the command-line driver) can separate configuration mistakes
from numeric failures.
"""


class ElastonetError(Exception):
    """Base class for all library errors."""


class ConfigError(ElastonetError):
    """Invalid parameters, geometry, or configuration supplied by the caller."""


class InvalidParameterError(ConfigError):
    """A numeric parameter violates its documented precondition."""


class InvalidGeometryError(ConfigError):
    """Geometry lies outside the domain or is degenerate."""


class MeshFormatError(ConfigError):
    """A mesh file failed to parse or references invalid entities."""


class DataFormatError(ConfigError):
    """A dataset or artifact file failed to parse."""


class OutOfDomainError(ConfigError):
    """A queried point lies outside the mesh bounding box."""


class DimensionMismatchError(ConfigError):
    """Vector/matrix shapes are inconsistent with the network layout."""


class UnitMismatchError(ConfigError):
    """Stress-unit metadata of two artifacts disagrees."""


class NumericError(ElastonetError):
    """Numeric failure during solving or training."""


class SolverError(NumericError):
    """The linear system could not be solved to tolerance."""


class TrainingDivergedError(NumericError):
    """A training loop produced a non-finite loss."""


class InvalidScaleError(NumericError):
    """A strain-scale vector has a non-positive component."""
