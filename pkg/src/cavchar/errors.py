"""Exception types raised across the package.

Every exception carries a short machine-readable ``code`` that the CLI
forwards to stderr.
"""


class CavcharError(Exception):
    code = "E_CAVCHAR"

    def __init__(self, message, code=None):
        super().__init__(message)
        if code is not None:
            self.code = code


class UnitMismatchError(CavcharError):
    code = "E_UNIT"


class AsymmetricError(CavcharError):
    code = "E_ASYMMETRIC"


class DomainError(CavcharError, ValueError):
    """Input outside the physical/mathematical domain of an operation."""

    code = "E_DOMAIN"


class ModeAssignmentError(DomainError):
    code = "E_MODE_ASSIGNMENT"


class DegenerateDataError(CavcharError, ValueError):
    code = "E_DEGENERATE"


class ConvergenceError(CavcharError, RuntimeError):
    code = "E_CONVERGENCE"
