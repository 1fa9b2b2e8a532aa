"""Exception hierarchy.

Everything raised deliberately by the package derives from ``StegError``.
Input-validation problems are also ``ValueError`` so callers that only care
about "bad input" can catch the builtin.
"""


class StegError(Exception):
    """Base class for all package errors."""


class ValidationError(StegError, ValueError):
    pass


# audio_io
class NotWav(ValidationError):
    pass


class UnsupportedFormat(ValidationError):
    pass


class Truncated(ValidationError):
    pass


# shared length / shape problems
class TooShort(ValidationError):
    pass


class LengthMismatch(ValidationError):
    pass


class Empty(ValidationError):
    pass


# dsp
class BadLength(ValidationError):
    pass


class OutOfRange(ValidationError):
    pass


class DegenerateFilter(ValidationError):
    pass


class MismatchedBank(ValidationError):
    pass


# embedders / analysis
class CapacityExceeded(ValidationError):
    pass


class BadSpec(ValidationError):
    pass


class BadPlane(ValidationError):
    pass


class EmptyCorpus(Empty):
    pass


# ml
class SingleClass(ValidationError):
    pass


class TooFewSamples(ValidationError):
    pass


class NotConverged(StegError, RuntimeError):
    pass
