"""Exception types shared across the package."""


class SurveyError(Exception):
    """Base class for all errors raised by sitesurvey."""


class ValidationError(SurveyError, ValueError):
    """Invalid input: malformed documents, bad ids, infeasible requests."""


class NumericalError(SurveyError, ArithmeticError):
    """A factorization or optimization failed even after regularization."""


class TimeLimitExceeded(SurveyError, TimeoutError):
    """A planner ran past its wall-clock limit."""
