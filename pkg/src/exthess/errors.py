"""Exception hierarchy shared by all exthess modules."""


class ExthessError(Exception):
    """Base class for all library-specific failures."""


class ConeViolationError(ExthessError, ValueError):
    """An eigenvalue vector left the admissibility cone.

    Carries the index of the first defining inequality that failed
    (``sigma_index``), so callers can report which sigma_j was nonpositive.
    """

    def __init__(self, message, sigma_index=None):
        super().__init__(message)
        self.sigma_index = sigma_index


class StructuralError(ExthessError, RuntimeError):
    """A bracketed solve failed because a structure condition of the
    operator does not hold (e.g. the eigenvalue-shift condition)."""


class DomainError(ExthessError, ValueError):
    """Arguments lie outside the documented domain of an operation
    (e.g. w below the lower envelope in an implicit solve)."""


class IntegrationError(ExthessError, RuntimeError):
    """A profile ODE integration failed or produced an inadmissible path."""


class AsymptoticsError(ExthessError, RuntimeError):
    """A decay fit or threshold detection could not be completed
    (e.g. fitted tail exponent not integrable)."""


class SpliceError(ExthessError, RuntimeError):
    """A barrier splice inequality could not be satisfied within the
    documented parameter budget."""
