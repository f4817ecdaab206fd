"""Exception hierarchy shared by every module.

Two families map onto CLI exit codes: ``PreconditionError`` (exit 2) for
inputs that violate an operation's contract, and ``BudgetError`` (exit 3)
for computations that ran out of work, precision or iterations.
"""


class CFLabError(Exception):
    exit_code = 1


class PreconditionError(CFLabError, ValueError):
    exit_code = 2


class DomainError(PreconditionError):
    pass


class ExprSyntaxError(PreconditionError):
    def __init__(self, message, position):
        super().__init__(f"{message} at position {position}")
        self.position = position


class NonMonotoneError(PreconditionError):
    pass


class InsufficientQuotientsError(PreconditionError):
    pass


class ConstructionError(PreconditionError):
    def __init__(self, message, index):
        super().__init__(f"{message} (n={index})")
        self.index = index


class BudgetError(CFLabError):
    exit_code = 3


class BudgetExceeded(BudgetError):
    def __init__(self, message, partial_count):
        super().__init__(f"{message} (visited {partial_count})")
        self.partial_count = partial_count


class PrecisionExhausted(BudgetError):
    pass


class DigitCapOverflow(BudgetError, OverflowError):
    pass


class NonConvergence(BudgetError):
    pass


class NoSignChange(BudgetError):
    pass
