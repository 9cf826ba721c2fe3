"""Exception types shared across the toolkit.

Every failure the library raises deliberately derives from LunarkitError,
so callers (and the CLI exit-code mapping) can distinguish toolkit errors
from programming mistakes. Plain OSError is left alone for I/O failures.
"""


class LunarkitError(Exception):
    """Base class for all toolkit errors."""


# --- ODL label parsing ---

class OdlParseError(LunarkitError):
    """A PDS3/ODL label could not be parsed."""


class MalformedValueError(OdlParseError):
    """A token does not match any accepted value production."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class UnbalancedBlockError(OdlParseError):
    """OBJECT/GROUP opener and closer do not pair up."""


class MissingEndError(OdlParseError):
    """The label has no terminating END statement."""


class NotFoundError(LunarkitError, KeyError):
    """A lookup path, pointer, or required keyword did not resolve."""

    def __str__(self) -> str:  # KeyError quotes its repr; keep the message readable
        return Exception.__str__(self)


class NeedsRecordBytesError(LunarkitError):
    """A record-offset pointer cannot be resolved without RECORD_BYTES."""


# --- PDS4 label parsing ---

class Pds4ParseError(LunarkitError):
    """A PDS4 XML label could not be parsed."""


class XmlMalformedError(Pds4ParseError):
    """The label is not well-formed XML."""


class MissingFileAreaError(Pds4ParseError):
    """The label has no observational file area / file name."""


class UnsupportedElementTypeError(Pds4ParseError):
    """The array element data type is outside the supported table."""


class UnsupportedSampleTypeError(Pds4ParseError):
    """A PDS3 SAMPLE_BITS/SAMPLE_TYPE pair is outside the supported table."""


class BadAxisNumberingError(Pds4ParseError):
    """Array axes are not numbered 1..n exactly once, or axis roles are unidentifiable."""


# --- raster decoding / statistics ---

class PayloadTooShortError(LunarkitError):
    """The binary payload is smaller than the descriptor requires."""

    def __init__(self, expected: int, actual: int):
        self.expected = expected
        self.actual = actual
        super().__init__(f"payload too short: need {expected} bytes, have {actual}")


class PayloadOverflowError(LunarkitError):
    """The descriptor implies a payload size beyond 2**63 - 1 bytes."""


class AllMissingError(LunarkitError):
    """Every sample in a raster is masked as missing."""


# --- PNG export ---

class StretchRangeError(LunarkitError):
    """Stretch method 'none' was given samples outside the target depth range."""


class UnsupportedBandsError(LunarkitError):
    """PNG export supports 1-band grayscale and 3-band truecolor only."""


# --- manifests ---

class SchemaError(LunarkitError):
    """A manifest line violates the v1 JSON-Lines schema."""


class EmptyDomainError(LunarkitError):
    """A dataset split left one domain empty (unusable training set)."""


# --- loss math ---

class EmptyBatchError(LunarkitError):
    """A probability batch has no elements."""


class ShapeMismatchError(LunarkitError):
    """Two arrays that must share a shape do not."""


class NonFiniteError(LunarkitError):
    """A loss component is NaN or infinite."""
