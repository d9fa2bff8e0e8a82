from typing import Optional


class LayeredKCError(Exception):
    """
    Base class for every failure raised by the layeredkc package.
    """


class InvalidLengthError(LayeredKCError, ValueError):
    """
    A requested length is too short for its base, or above the configured limit.
    """


class BudgetExceededError(LayeredKCError):
    """
    Accepting a request would push the weight past the available capacity.
    `index` is the position of the offending request when known.
    """

    def __init__(self, message: str, index: Optional[int] = None):
        super().__init__(message)
        self.index = index


class CombinedBudgetError(BudgetExceededError):
    """
    wgt(L) + wgt(Q) is larger than 1.
    """


class SolverFailedError(LayeredKCError):
    """
    A request reached a plain solver that already failed.
    """


class InvalidSequenceError(LayeredKCError, ValueError):
    def __init__(self, index: int, reason: str):
        super().__init__(f"request {index}: {reason}")
        self.index = index
        self.reason = reason


class HypothesisFailureError(LayeredKCError):
    """
    No code on the characteristic sequence had room for the next request.
    Only reachable when the weight bound was not respected.
    """


class AvoidanceError(LayeredKCError):
    pass


class UndefinedMeasureError(LayeredKCError):
    pass


class EnumerationOrderError(LayeredKCError, ValueError):
    pass


class TargetBeyondBoundError(LayeredKCError):
    pass


class EncodingError(LayeredKCError):
    pass


class DecodingError(LayeredKCError):
    """
    Replay found no code matching the prefixes of the given stream.
    """


class FormatError(LayeredKCError, ValueError):
    def __init__(self, message: str, line: Optional[int] = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class RunValidationError(LayeredKCError, ValueError):
    pass


class WeightAccountingError(LayeredKCError):
    pass


class ConfigError(LayeredKCError):
    pass
