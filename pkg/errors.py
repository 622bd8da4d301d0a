"""
Exceptions raised by the slot allocation lab.
"""


class OsaLabError(Exception):
    """Base class for every error the lab raises on purpose."""


# Instance model

class InvalidInstance(OsaLabError, ValueError):
    pass


class LengthMismatch(InvalidInstance):
    pass


class NonPositiveWeight(InvalidInstance):
    pass


class NegativeCost(InvalidInstance):
    pass


class NonFiniteCost(InvalidInstance):
    pass


class DecreasingCosts(InvalidInstance):
    pass


class EmptyDistribution(InvalidInstance):
    pass


class InvalidAllocation(InvalidInstance):
    pass


class PartialAllocation(InvalidAllocation):
    pass


class NotAPermutation(InvalidInstance):
    pass


class InstanceFileError(OsaLabError):
    pass


# Evaluation

class TooLarge(OsaLabError, ValueError):
    """The exact oracle would need too many states or permutations."""


class ZeroOptimum(OsaLabError, ArithmeticError):
    pass


class CapExceeded(OsaLabError, RuntimeError):
    """A request stream ran past its request cap before every item showed up."""


class InvalidSlot(OsaLabError, ValueError):
    """A policy returned a slot that is not vacant."""


class BadParameters(OsaLabError, ValueError):
    pass


# Codec

class CodecError(OsaLabError):
    pass


class InvalidPrefix(CodecError, ValueError):
    pass


class TruncatedStream(CodecError, EOFError):
    def __init__(self, message, decoded=None):
        super().__init__(message)
        # Symbols fully decoded before the stream ran out
        self.decoded = list(decoded or [])


class BadHeader(CodecError, ValueError):
    pass


class SymbolTooWide(CodecError, ValueError):
    pass


class SinkFailure(CodecError, OSError):
    pass


# Command line / experiments

class BadSpec(OsaLabError, ValueError):
    pass


class EmptyCorpus(OsaLabError, ValueError):
    pass


class CorpusReadError(OsaLabError, OSError):
    pass


class OutputWriteError(OsaLabError, OSError):
    """A report, instance or decoded file could not be written."""
