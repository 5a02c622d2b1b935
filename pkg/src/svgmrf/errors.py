"""Exception types shared across the package."""


class SvgmrfError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(SvgmrfError, ValueError):
    """An argument violates a documented precondition."""


class SingularBackwardMappingError(SvgmrfError):
    """The thresholded covariance of some cluster is numerically singular.

    Signals that the threshold is too small for the available samples.
    """

    def __init__(self, cluster, nu, cond=None):
        self.cluster = cluster
        self.nu = nu
        self.cond = cond
        msg = f"thresholded covariance of cluster {cluster} is singular or " \
              f"ill-conditioned at nu={nu:.6g}"
        if cond is not None:
            msg += f" (condition number {cond:.3e})"
        super().__init__(msg)


class SolverFailureError(SvgmrfError):
    """A coordinate solve failed to reach the required optimality tolerance."""

    def __init__(self, message, coordinate=None):
        self.coordinate = coordinate
        if coordinate is not None:
            message = f"{message} (coordinate {coordinate})"
        super().__init__(message)


class NotPositiveDefiniteError(SvgmrfError):
    """A matrix required to be positive definite failed its factorization."""


class NoValidModelError(SvgmrfError):
    """Every hyperparameter triple in a grid search was invalid."""

    def __init__(self, reasons):
        self.reasons = list(reasons)
        lines = "; ".join(f"{trip}: {why}" for trip, why in self.reasons)
        super().__init__(f"no valid model in grid ({lines})")


class FormatError(SvgmrfError):
    """An input file does not match the documented layout."""
