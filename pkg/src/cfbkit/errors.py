"""Exception hierarchy shared by every module of the package."""


class CfbError(Exception):
    """Base class for all errors raised by ``cfbkit``."""


class InvalidParameter(CfbError, ValueError):
    """A scalar parameter is outside its admissible range."""


class OutOfDomain(CfbError, ValueError):
    """A point lies outside the open unit disk (or too close to its edge)."""


class TruncationInsufficient(CfbError):
    """The finite truncation cannot certify the requested quantity."""


class DegenerateSymbol(CfbError, ValueError):
    """The symbol is identically zero."""


class Unsupported(CfbError):
    """The operation is not defined for this kind of input."""


class NearSingular(CfbError):
    """A resolvent or Gram matrix is too ill-conditioned to invert."""


class SingularFrame(NearSingular):
    """A holomorphic frame is not pointwise linearly independent."""


class ConstructionRejected(CfbError):
    """A CFB operator failed one of its build-time invariants.

    ``block`` holds the (1-based) block index that failed.
    """

    def __init__(self, msg, block=None):
        super().__init__(msg)
        self.block = block


class StructureViolation(CfbError):
    """An intertwiner is not block upper triangular."""


class InvalidWitness(CfbError):
    """A supplied witness does not produce an admissible metric ratio."""


class PreconditionError(CfbError, ValueError):
    """A documented precondition of an operation does not hold."""


class DimensionCap(CfbError):
    """A vectorized linear system would exceed the supported size."""


class NotFound(CfbError):
    """A search over a solution space came back empty."""


class OutOfScopeParameters(CfbError, ValueError):
    """Parameters fall outside the family an operation is defined for."""
