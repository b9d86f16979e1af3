"""Exception hierarchy shared by every module of the package."""


class FracvarError(Exception):
    """Base class for all package errors."""


class ParameterOutOfRange(FracvarError, ValueError):
    """A process parameter violates the admissible range of its family."""


class DomainError(FracvarError, ValueError):
    """An argument lies outside the domain of the operation (times, grids, levels)."""


class OutOfRange(FracvarError, ValueError):
    """A statistic cannot be inverted because it is outside the image of the map."""


class GridMismatch(FracvarError, ValueError):
    """The path was not sampled on the grid structure a statistic requires."""


class HypothesesIndistinguishable(FracvarError, ValueError):
    """Two hypotheses share the almost-sure limit used to separate them."""


class NumericalFailure(FracvarError, ArithmeticError):
    """Base class for failures of a numerical routine rather than of the inputs."""


class NotPositiveDefinite(NumericalFailure):
    """Cholesky factorisation failed even after the full jitter ladder."""


class EmbeddingNotNonnegative(NumericalFailure):
    """The circulant embedding has a materially negative eigenvalue."""


class DivergentJump(NumericalFailure):
    """The one-sided derivative jump of the kernel blows up at a probe point."""
