"""Exception hierarchy shared by every stage of the toolkit."""


class StructCodeError(Exception):
    """Base class for all toolkit errors."""


# codec
class CodecError(StructCodeError):
    pass


class UnknownCharacter(CodecError):
    pass


class ReservedBlock(CodecError):
    pass


class UnmappedValue(CodecError):
    pass


class MessageTooLong(CodecError):
    pass


class EmptyMessage(CodecError):
    pass


class NoAnchorFound(CodecError):
    pass


class AmbiguousAnchor(CodecError):
    pass


class InvalidBlock(CodecError):
    pass


# design model
class DesignError(StructCodeError):
    pass


class MalformedSvg(DesignError):
    pass


class UnsupportedElement(DesignError):
    pass


class MissingUnits(DesignError):
    pass


class TooFewElements(DesignError):
    pass


# embedding
class EmbedError(StructCodeError):
    pass


class Infeasible(EmbedError):
    pass


class CapacityExceeded(EmbedError):
    pass


class MissingNeighborGeometry(EmbedError):
    pass


class UnknownStructure(EmbedError):
    pass


# image processing
class ImageError(StructCodeError):
    pass


class BadKernelSize(ImageError):
    pass


class BadBlockSize(ImageError):
    pass


class DegenerateImage(ImageError):
    pass


class NonBinaryInput(ImageError):
    pass


class DegenerateContour(ImageError):
    pass


class DegenerateQuad(ImageError):
    pass


class TooFewPoints(ImageError):
    pass


# render
class EmptyDesign(StructCodeError):
    pass


# decode
class DecodeError(StructCodeError):
    pass


class NoCandidates(DecodeError):
    pass


class EdgeFitFailed(DecodeError):
    pass


class InconsistentAlternation(DecodeError):
    pass


class UnclassifiableSpread(DecodeError):
    pass


class GridInconsistent(DecodeError):
    pass


class DecodeFailed(DecodeError):
    pass


class AmbiguousScene(DecodeError):
    pass
