"""Exception types shared across the package."""


class DrsplitError(Exception):
    """Base class for all package-specific errors."""


class SingularSystem(DrsplitError):
    """A dense linear solve hit a pivot below the singularity threshold."""


class NotOrthonormal(DrsplitError):
    """A matrix that must have orthonormal rows failed the check."""


class NotSingleValued(DrsplitError):
    """An operation needed a forward evaluation the operator does not have."""


class ZeroVector(DrsplitError):
    """A nonzero vector was required."""


class NoConvergence(DrsplitError):
    """An iterative dense eigensolver did not converge."""


class IncompatibleForm(DrsplitError):
    """Solver form, operator pair and stepsize controller do not fit together."""


class RankDeficient(DrsplitError):
    """A generated problem instance violated its full-rank requirement."""


class InvalidName(DrsplitError):
    """Unknown problem name passed to a generator."""
