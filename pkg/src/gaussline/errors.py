"""Exception types shared across the package."""


class GausslineError(Exception):
    """Base class; the CLI maps subclasses to exit codes."""


class DomainError(GausslineError, ValueError):
    pass


class BudgetError(GausslineError):
    """Enumeration or refinement would exceed the configured work budget."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class BracketError(GausslineError):
    def __init__(self, message, p_lo=None, p_hi=None):
        super().__init__(message)
        self.p_lo = p_lo
        self.p_hi = p_hi


class PrecisionError(GausslineError):
    pass


class DivergentPressureError(GausslineError):
    pass


class FitError(GausslineError):
    pass
