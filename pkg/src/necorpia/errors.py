"""Exception types shared across the package."""


class NecorpiaError(Exception):
    """Base class for all package errors."""


class ShapeError(NecorpiaError, ValueError):
    """Operand dimensions do not conform."""


class InsufficientRankError(NecorpiaError, ValueError):
    """A matrix does not have the rank an operation requires."""


class FormatError(NecorpiaError, ValueError):
    """A packet field is out of range or has the wrong length."""


class NotASourcePacketError(FormatError):
    """A header block does not hold exactly one set bit."""


class EnumerationLimitError(NecorpiaError, ValueError):
    """Brute-force enumeration refused because the instance is too large."""


class TopologyError(NecorpiaError, RuntimeError):
    """No topology satisfying the constraints was found within the retry budget."""


class NonTerminationError(NecorpiaError, RuntimeError):
    """A simulation hit its slot limit before the sink could decode."""
