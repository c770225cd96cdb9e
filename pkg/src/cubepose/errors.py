"""Exception types shared across the library."""


class CubePoseError(Exception):
    """Base class for all cubepose errors."""


class NotARotationError(CubePoseError, ValueError):
    """A matrix expected to be a rotation is not orthonormal with det +1."""


class DegenerateCubeError(CubePoseError, ValueError):
    """A cube whose geometry is too collapsed to carry pose information."""


class ProjectionConstraintError(CubePoseError, ValueError):
    """A cube violates the scaled-orthonormal projection constraints."""


class RatioPathSingularError(CubePoseError, ValueError):
    """The ratio-based decoder hit a near-zero denominator."""


class FileFormatError(CubePoseError, ValueError):
    """A data file is malformed; the message carries line/offset context."""
