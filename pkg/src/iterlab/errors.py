"""Exception hierarchy shared by all iterlab modules."""


class IterlabError(Exception):
    """Base class for every error raised by this package."""


class DomainError(IterlabError, ValueError):
    """Argument outside the domain of a function, or a NaN/Inf sample."""


class NonConvergence(IterlabError, RuntimeError):
    """An adaptive procedure exhausted its budget before meeting tolerance."""


class StepUnderflow(IterlabError, ArithmeticError):
    """Finite-difference step collapsed below machine resolution."""


class GridTooCoarse(IterlabError, ValueError):
    """Spectral content at the top of the band is too large for the grid."""


class SingularPoint(DomainError):
    """Density requested exactly on a non-integrable-in-value singular locus."""


class DegenerateTime(DomainError):
    """t = 0 requested where the law is a point mass."""


class NotPositiveDefinite(IterlabError, ArithmeticError):
    """Covariance matrix could not be factorized even after jitter."""


class EmbeddingFailure(IterlabError, RuntimeError):
    """Circulant embedding and its Cholesky fallback both failed."""


class SeriesDivergence(IterlabError, ArithmeticError):
    """A formal power series stopped converging before its truncation target."""


class ToleranceBudgetExceeded(IterlabError):
    """Evaluation error times stencil amplification exceeds the tolerance."""
