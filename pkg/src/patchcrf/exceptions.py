"""Exception hierarchy.

Every error raised deliberately by the package derives from
:class:`PatchCRFError`. Most also derive from the builtin exception a
caller would naturally catch (``ValueError`` for bad arguments, etc.).
"""

from sklearn.exceptions import ConvergenceWarning


class PatchCRFError(Exception):
    """Base class for all package errors."""


# grid_scan

class HilbertGridUnsupported(PatchCRFError, ValueError):
    pass


class ImageTooSmall(PatchCRFError, ValueError):
    pass


class LengthMismatch(PatchCRFError, ValueError):
    pass


# imaging

class ImageDecodeError(PatchCRFError, ValueError):
    pass


class UnsupportedFormat(ImageDecodeError):
    pass


class MalformedHeader(ImageDecodeError):
    pass


class TruncatedPayload(ImageDecodeError):
    pass


class ZeroTargetDimension(PatchCRFError, ValueError):
    pass


# shared numeric errors

class DimensionMismatch(PatchCRFError, ValueError):
    pass


class WrongPatchSize(PatchCRFError, ValueError):
    pass


class InsufficientData(PatchCRFError, ValueError):
    pass


class TooFewSamples(InsufficientData):
    pass


class InstanceTooLarge(PatchCRFError, ValueError):
    pass


class SingleClassData(PatchCRFError, ValueError):
    pass


class NoConvergence(ConvergenceWarning):
    """Warning: the SMO iteration cap was reached before the KKT tolerance."""


# pipeline / cli

class DatasetTooSmall(PatchCRFError, ValueError):
    pass


class UnknownLabel(PatchCRFError, ValueError):
    pass


class EmptyDataset(PatchCRFError, ValueError):
    pass


class ClassTooSmall(PatchCRFError, ValueError):
    pass


class ModelFormatError(PatchCRFError, ValueError):
    pass


class VersionMismatch(ModelFormatError):
    pass


class SchemaError(ModelFormatError):
    pass
