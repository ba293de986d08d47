"""Exception types shared across the package."""


class HybridCorrError(Exception):
    """Base class for all package errors."""


class ValidationError(HybridCorrError, ValueError):
    """A parameter violates an operation's precondition."""


class AmplitudeTooLargeError(ValidationError):
    """Coherent amplitude exceeds the Fock truncation guard |alpha|^2 <= n_max/4."""


class DimensionError(ValidationError):
    pass


class NotDensityError(ValidationError):
    """Operator is not a valid density operator (hermitian, unit trace, PSD)."""


class AccuracyError(HybridCorrError, ArithmeticError):
    """A numerical result cannot be trusted to the requested tolerance."""


class ConvergenceError(AccuracyError):
    pass


class UndefinedConditionalError(HybridCorrError, ArithmeticError):
    """Conditioning on an outcome with zero probability (or density)."""
