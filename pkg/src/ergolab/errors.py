"""Exception types shared across the package.

Budget-style failures derive from :class:`BudgetExceeded` so callers (and the
command line front end) can treat them uniformly.
"""


class ErgolabError(Exception):
    """Base class for every error raised by ergolab."""


class ValidationError(ErgolabError, ValueError):
    """Inputs violate a documented precondition."""


class BudgetExceeded(ErgolabError):
    """A computation would exceed its configured work budget."""


class WindowTooLarge(BudgetExceeded):
    pass


class ShiftBudgetExceeded(BudgetExceeded):
    pass


class GowersBudgetExceeded(BudgetExceeded):
    pass


class NumericalInvariantError(ErgolabError):
    """A numerical invariant was violated at run time."""


class BoundViolation(NumericalInvariantError):
    def __init__(self, value, bound, where=None):
        self.value = value
        self.bound = bound
        self.where = where
        msg = f"|a(n)| = {value!r} exceeds declared bound {bound!r}"
        if where is not None:
            msg += f" at n = {where}"
        super().__init__(msg)


class FrequencyOverflow(ErgolabError, OverflowError):
    pass


class SieveRange(ErgolabError, ValueError):
    pass


class PrimeClash(ValidationError):
    pass


class DomainError(ValidationError):
    pass


class OrderTooSmall(ValidationError):
    pass


class DegreeCap(BudgetExceeded):
    pass


class PrecisionBudgetExceeded(BudgetExceeded):
    pass


class GramIllConditioned(NumericalInvariantError):
    """Raised by the greedy fitter; ``partial`` holds the last good report."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial
