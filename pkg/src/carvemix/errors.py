"""Exception hierarchy shared by all modules."""


class CarveMixError(Exception):
    """Base class for every error raised by this package."""


class ShapeMismatch(CarveMixError):
    """Operands do not share the same voxel grid shape."""


class SpacingMismatch(CarveMixError):
    """Operands disagree on voxel spacing beyond tolerance."""


class EmptyMask(CarveMixError):
    """Mask has no foreground voxel where one is required."""


class FullMask(CarveMixError):
    """Mask has no background voxel; the boundary is undefined."""


class GridTooLarge(CarveMixError):
    """Grid exceeds the size cap of the exhaustive reference path."""


class EmptyROI(CarveMixError):
    """Threshold selected no voxel at all (caller bug)."""


class DegenerateLesion(CarveMixError):
    """Distance-field minimum is not negative; nothing to carve."""


class NonBinaryLabel(CarveMixError):
    """Label data contains values other than 0 and 1."""


class UnsupportedDatatype(CarveMixError):
    """File uses a voxel datatype outside the supported subset."""


class CorruptHeader(CarveMixError):
    """File header failed structural validation."""


class NonFiniteData(CarveMixError):
    """Image voxels contain NaN after decoding."""


class IoError(CarveMixError):
    """Filesystem operation failed; message names the path."""


class ConfigError(CarveMixError):
    """Invalid configuration or method/field combination."""


class NoEligibleDonor(CarveMixError):
    """Every roster annotation is empty; carving needs a lesion."""
