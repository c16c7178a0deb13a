"""Exception hierarchy.

Every error raised for bad input data derives from :class:`SliceMeshError`,
which the command line maps to exit status 2.
"""


class SliceMeshError(ValueError):
    """Base class for all data errors raised by slicemesh."""


# slice readers
class DicomError(SliceMeshError):
    pass


class MissingTag(DicomError):
    def __init__(self, tag, name=""):
        self.tag = tag
        label = f"({tag[0]:04X},{tag[1]:04X})"
        super().__init__(f"required tag {label} {name} is missing".rstrip())


class UnsupportedTransferSyntax(DicomError):
    pass


class LengthMismatch(DicomError):
    pass


class TruncatedFile(DicomError):
    pass


class PgmError(SliceMeshError):
    pass


class MalformedHeader(PgmError):
    pass


class TruncatedPixelData(PgmError):
    pass


class InvalidWindow(SliceMeshError):
    pass


# image pipeline / segmentation
class InvalidParam(SliceMeshError):
    pass


class InvalidKernel(SliceMeshError):
    pass


class EmptyInput(SliceMeshError):
    pass


# contours
class InvalidSpan(SliceMeshError):
    pass


class TooFewPoints(SliceMeshError):
    pass


class DegenerateWindow(SliceMeshError):
    pass


class DegenerateContour(SliceMeshError):
    pass


class MalformedPointFile(SliceMeshError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


# meshing
class AllCollinear(SliceMeshError):
    pass


class DuplicatePoints(SliceMeshError):
    pass


class DegenerateLayer(SliceMeshError):
    pass


class LayerMismatch(SliceMeshError):
    pass


# STL
class TooManyFacets(SliceMeshError):
    pass


class MalformedStl(SliceMeshError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


# phantom / CLI
class InvalidParams(SliceMeshError):
    pass


class SingularFitWarning(RuntimeWarning):
    """Local fit fell back to a lower polynomial degree."""
