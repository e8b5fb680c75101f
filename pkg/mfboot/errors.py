"""
Errors - Exception hierarchy shared by the library, CLI and MCP adapters
"""


class MFBootError(Exception):
    """Base class for every error raised by mfboot"""


class InvalidInputError(MFBootError, ValueError):
    """An argument or data set violates a documented precondition"""


class DegenerateSampleError(InvalidInputError):
    """The sample carries no variability (constant series, zero residual variance)"""


class NumericalError(MFBootError, ArithmeticError):
    """A numerical procedure could not produce a usable result"""


class DegenerateCovarianceError(NumericalError):
    """A covariance estimate is not usable (nonpositive variance or Schur complement)"""


class FactorizationError(NumericalError):
    """Cholesky factorization failed on a matrix expected to be positive definite"""


class ReplicateBudgetError(NumericalError):
    """Too many bootstrap replicates or experiments failed"""

    def __init__(self, failures: int, total: int, what: str = "replicates"):
        self.failures = failures
        self.total = total
        super().__init__(f"{failures} of {total} {what} failed (budget is 5%)")


class ReportWriteError(MFBootError, OSError):
    """A report could not be written to the requested path"""
