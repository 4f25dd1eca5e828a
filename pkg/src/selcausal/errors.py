"""Exception hierarchy and warning categories."""


class SelCausalError(Exception):
    """Base class for all library errors."""


class DataValidationError(SelCausalError):
    """Raised when input data violates a structural requirement."""


class ModelFitError(SelCausalError):
    """Raised when a nuisance model cannot be fit (rank deficiency,
    separation / non-convergence, arm too small)."""


class HullViolationError(SelCausalError):
    """Raised when the zero vector is not interior to the convex hull of
    the constraint vectors, so the empirical likelihood problem is
    infeasible.

    Attributes:
        arm: which treatment arm failed (1, 0, or None when unknown).
    """

    def __init__(self, message, arm=None):
        super().__init__(message)
        self.arm = arm


class NonConvergenceError(SelCausalError):
    """Raised when an iterative solver exhausts its iteration budget."""


class CIRootError(SelCausalError):
    """Raised when confidence-interval root finding cannot bracket an
    endpoint (ratio too flat, or feasible region exhausted)."""


class PositivityWarning(UserWarning):
    """Emitted when fitted propensity scores are numerically extreme."""
