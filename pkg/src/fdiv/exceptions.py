"""Exception types shared across the package."""


class FdivError(Exception):
    """Base class for all package errors."""


class DomainError(FdivError):
    """An argument lies outside the mathematical domain of the operation."""


class UnsupportedAlpha(FdivError):
    """Requested alpha-divergence index outside the supported range [-1, 2]."""


class DimensionMismatch(FdivError):
    """Array shapes are inconsistent with the declared feature dimensions."""


class EmptyDataset(FdivError):
    """A sample set required to be non-empty has zero rows."""


class TooFewSamples(FdivError):
    """An operation needs more samples than provided (e.g. debiasing needs n >= 2)."""


class SingularReference(FdivError):
    """The reference second moment is not positive definite; set lambda_reg > 0."""


class DimensionGuard(FdivError):
    """Product feature space too large for the dense closed-form path."""


class IndefiniteTangent(FdivError):
    """Tangent surrogate lost concavity due to numerics; step rejected."""


class DivergedObjective(FdivError):
    """An iterative optimizer produced a non-finite objective."""


class RejectionStall(FdivError):
    """Rejection sampler acceptance rate collapsed below the safety floor."""
