"""Exception types shared by all modules."""


class ArithDynError(Exception):
    """Base class for every error raised by the package."""


class ZeroInput(ArithDynError, ValueError):
    pass


class ReducibleMinimalPolynomial(ArithDynError, ValueError):
    pass


class DegreeOne(ArithDynError, ValueError):
    pass


class NotRegular(ArithDynError, ValueError):
    pass


class NotPeriodic(ArithDynError, ValueError):
    pass


class PowerMapDegenerate(ArithDynError, ValueError):
    pass


class PreconditionViolated(ArithDynError, ValueError):
    pass


class SpecialInput(ArithDynError, ValueError):
    pass


class PositiveDimensional(ArithDynError):
    pass


class RootIsolationFailure(ArithDynError):
    pass


class BudgetError(ArithDynError):
    """Raised when a computation would exceed a size budget."""


class PrecisionExhausted(BudgetError):
    pass


class CoefficientBlowup(BudgetError):
    pass


class DegreeBudgetExceeded(BudgetError):
    pass


class ParseError(ArithDynError, ValueError):
    """Malformed user input. ``position`` is a 0-based column in ``text``."""

    def __init__(self, message, text="", position=None, field=None):
        self.message = message
        self.text = text
        self.position = position
        self.field = field
        super().__init__(self.__str__())

    def __str__(self):
        where = f"{self.field}: " if self.field else ""
        if self.position is None:
            return f"{where}{self.message}"
        caret = " " * self.position + "^"
        return f"{where}{self.message} at position {self.position}\n  {self.text}\n  {caret}"
