"""Exception hierarchy.

The CLI maps these onto its exit-code taxonomy: :class:`ParseError` -> 2,
:class:`PreconditionError` -> 3, :class:`InvariantError` -> 4.
"""


class DcalcError(Exception):
    """Base class for every error raised by this package."""


class ParseError(DcalcError, ValueError):
    pass


class PreconditionError(DcalcError, ValueError):
    """An input violated the documented precondition of an operation."""


class InvariantError(DcalcError, AssertionError):
    """An internal identity that the theory guarantees failed to hold."""


class NotDivisible(PreconditionError):
    pass


class NonIntegralCoefficient(PreconditionError):
    pass


class RingMismatch(PreconditionError, TypeError):
    pass


class ArityMismatch(PreconditionError):
    pass


class LevelMismatch(PreconditionError):
    pass


class NotDivisibleLevel(PreconditionError):
    pass


class CongruenceFailure(PreconditionError):
    pass


class LevelTooHigh(PreconditionError):
    pass


class UnsupportedShape(PreconditionError):
    pass


class OrderOverflow(PreconditionError):
    pass


class NotInEnvelope(PreconditionError):
    pass


class InvalidFrobeniusLift(PreconditionError):
    pass


class NonConvergence(PreconditionError):
    pass


class NoStableLattice(PreconditionError):
    pass


class ExactDivisionFailure(InvariantError):
    pass
