"""Exception types shared across the package."""


class NumericsError(Exception):
    """Base class for every error raised by this package."""


class NotCoprime(NumericsError, ValueError):
    pass


class InexactDivision(NumericsError, ArithmeticError):
    pass


class NotADivisor(NumericsError, ValueError):
    pass


class DivergentParameter(NumericsError, ValueError):
    pass


class PoleAtNonpositiveInteger(NumericsError, ValueError):
    pass


class PoleAtOne(NumericsError, ValueError):
    pass


class OutOfValidatedRange(NumericsError, ValueError):
    pass


class IntegerOrderUnsupported(NumericsError, ValueError):
    pass


class UndefinedAtZero(NumericsError, ValueError):
    pass


class ZeroFunction(NumericsError, ValueError):
    pass


class TailNotNegligible(NumericsError, ArithmeticError):
    pass


class UsageError(NumericsError, ValueError):
    pass


class InvalidValue(UsageError):
    pass
