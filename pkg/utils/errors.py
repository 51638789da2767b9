"""Error taxonomy shared by every package."""


class RTRLLabError(Exception):
    """Base class for all errors raised by this project"""


class ContractViolationError(RTRLLabError, ValueError):
    """Inputs violate an operation's precondition (dimensions, ranges)"""


class ConfigurationError(RTRLLabError, ValueError):
    """Invalid experiment, system or rule configuration"""


class DomainError(RTRLLabError, ValueError):
    """Input lies outside the mathematical domain of an operation"""


class BudgetError(RTRLLabError):
    """An exhaustive enumeration would exceed the configured budget"""


class NumericOverflowError(RTRLLabError, FloatingPointError):
    """A non-finite or oversized intermediate was produced.

    stage names the step that produced it (transition, jacobian, gradient,
    update, ...) and t is the time index, or None outside a time loop.
    """

    def __init__(self, stage, t=None, message=None):
        self.stage = stage
        self.t = t
        if message is None:
            where = f" at t={t}" if t is not None else ""
            message = f"Numeric overflow in stage '{stage}'{where}"
        super().__init__(message)
