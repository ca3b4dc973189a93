"""Exception types raised by momquant."""


class MomQuantError(ValueError):
    """Base class for input and contract errors."""


class DimensionMismatchError(MomQuantError):
    pass


class InfeasibleConfidenceError(MomQuantError):
    """The requested confidence needs more blocks than there are samples."""

    def __init__(self, ell: int, n: int):
        self.ell = ell
        self.n = n
        super().__init__(f"block count ell={ell} exceeds sample size n={n}")


class ContractViolation(MomQuantError):
    pass


class SpecError(MomQuantError):
    """Malformed distribution or sampler specification."""
