"""Exception hierarchy shared by every module."""


class HybridDRError(Exception):
    """Base class for all package errors."""


class SchemaError(HybridDRError):
    """A required CSV column is missing."""


class RowError(HybridDRError):
    """A CSV row could not be turned into a record."""

    def __init__(self, line, message):
        super().__init__(f"line {line}: {message}")
        self.line = line
        self.reason = message


class AlignmentError(HybridDRError):
    pass


class EmptySeriesError(AlignmentError):
    pass


class DegenerateInputError(HybridDRError, ValueError):
    """Input is constant, too short, or otherwise makes a statistic undefined."""


class DomainError(HybridDRError, ValueError):
    pass


class InsufficientDataError(HybridDRError, ValueError):
    pass


class ConditioningError(HybridDRError, ArithmeticError):
    pass


class SingularDesignError(HybridDRError, ArithmeticError):
    """Design matrix is rank deficient; ``columns`` names the dependent ones."""

    def __init__(self, columns, message=None):
        self.columns = list(columns)
        super().__init__(message or f"design matrix is rank deficient; collinear columns: {self.columns}")


class TransformDomainError(DomainError):
    """Log transform requested on nonpositive prices."""


class NoEquilibriumError(HybridDRError, ValueError):
    pass


class InfeasibleDispatchError(HybridDRError, ValueError):
    """Post-shift supply cannot serve the quantity locked in by inert demand."""


class SpecValidationError(HybridDRError, ValueError):
    pass


class StageError(HybridDRError):
    """A pipeline stage failed. Carries the stage name and the artifacts already written."""

    def __init__(self, stage, cause, written=()):
        self.stage = stage
        self.cause = cause
        self.written = list(written)
        super().__init__(f"stage '{stage}' failed: {cause}")
