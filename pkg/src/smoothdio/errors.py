"""Exception hierarchy.

Two families matter to callers: :class:`HypothesisViolated` (bad input or a
failed precondition, CLI exit 2) and :class:`ResourceExhausted` (precision,
memory or work budget hit, CLI exit 3).
"""


class SmoothDioError(Exception):
    """Base class for all package errors."""


class HypothesisViolated(SmoothDioError, ValueError):
    """An input does not satisfy the hypothesis of the operation."""


class ResourceExhausted(SmoothDioError):
    """A precision, memory or work budget was exhausted."""


class NotIrrational(HypothesisViolated):
    pass


class BadFraction(HypothesisViolated):
    """gcd(a, q) != 1."""


class GammaNonpositive(HypothesisViolated):
    pass


class NoBracket(HypothesisViolated):
    pass


class PrecisionExhausted(ResourceExhausted):
    pass


class NoConvergentInPrecision(PrecisionExhausted):
    pass


class ToleranceUnreachable(ResourceExhausted):
    pass


class BudgetExceeded(ResourceExhausted):
    pass


class WindowTooLarge(BudgetExceeded):
    pass
