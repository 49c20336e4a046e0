"""Exception hierarchy.

Input problems derive from :class:`ValidationError` (a ``ValueError``);
the CLI maps them to exit code 2.  Numerical ill-conditioning raises
:class:`IllConditionedError` and maps to exit code 3.
"""


class ValidationError(ValueError):
    """Raised when an input violates a documented precondition."""


class EmptyInputError(ValidationError):
    """Raised for zero-dimensional matrices."""


class DimensionMismatchError(ValidationError):
    """Raised when operands do not share a common dimension."""


class NotHermitianError(ValidationError):
    """Raised when a matrix required to be Hermitian is not.

    The offending asymmetry ``||m - m*||`` is kept on ``asymmetry``.
    """

    def __init__(self, msg, asymmetry):
        super().__init__(msg)
        self.asymmetry = asymmetry


class NotAProjectionError(ValidationError):
    """Raised when a matrix fails the Hermitian-idempotent check."""

    def __init__(self, msg, hermitian_residual, idempotent_residual):
        super().__init__(msg)
        self.hermitian_residual = hermitian_residual
        self.idempotent_residual = idempotent_residual


class MatrixFormatError(ValidationError):
    """Raised when a serialized matrix or document is malformed."""


class NotApplicableError(ValidationError):
    """Raised when an operation's structural precondition does not hold."""


class IllConditionedError(ArithmeticError):
    """Raised when a decision sits inside a tolerance band."""
