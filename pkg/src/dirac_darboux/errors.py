"""Error hierarchy shared by the whole package.

Two families matter for the CLI exit-code contract: invalid input (exit 2)
and numerical failure (exit 3).  Everything derives from DiracDarbouxError
so callers can catch the lot in one clause.
"""

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_INVALID_INPUT = 2
EXIT_NUMERICAL_FAILURE = 3


class DiracDarbouxError(Exception):
    """Base class for all package errors."""

    exit_code = EXIT_INVALID_INPUT


class InvalidParameterError(DiracDarbouxError):
    """A precondition on user-supplied parameters was violated."""

    exit_code = EXIT_INVALID_INPUT


class InvalidOperatorError(InvalidParameterError):
    """gamma is not anti-Hermitian, singular, or of unsupported size."""


class InvalidSeedEnergyError(InvalidParameterError):
    """Seed energy outside the open band or on a formula denominator."""


class InvalidInputError(InvalidParameterError):
    """Malformed argument (wrong dimension, unknown key, bad combination)."""


class PoleInFormulaError(InvalidParameterError):
    """Closed-form solution evaluated at a pole of its denominator."""


class NotScatteringEnergyError(InvalidParameterError):
    """Energy inside the band: no propagating channels exist."""


class OneSidedScatteringError(InvalidParameterError):
    """Energy propagates on one side of the barrier only."""


class NotReducibleError(InvalidParameterError):
    """4x4 potential violates the block-reduction constraints."""

    def __init__(self, message, leakage=None):
        super().__init__(message)
        self.leakage = leakage


class NumericalFailure(DiracDarbouxError):
    """A numerical routine produced non-finite or untrustworthy output."""

    exit_code = EXIT_NUMERICAL_FAILURE


class SingularMatrixError(NumericalFailure):
    """Matrix inversion below the singularity threshold."""

    def __init__(self, message, abs_det=None):
        super().__init__(message)
        self.abs_det = abs_det


class SingularSeedError(NumericalFailure):
    """det U (or a block determinant) vanishes on the evaluation grid."""

    def __init__(self, message, x=None):
        super().__init__(message)
        self.x = x


class InvalidSeedError(NumericalFailure):
    """Seed columns fail the eigensolution residual tolerance."""


class DegenerateAsymptoticsError(NumericalFailure):
    """Asymptotic denominator D+- vanishes outside the degenerate branch."""
