"""Exception types shared across the package."""


class PieError(Exception):
    """Base class for all errors raised by pielimits."""


class DomainError(PieError, ValueError):
    """An argument lies outside the domain of the operation."""


class InfiniteDivergenceError(PieError, ArithmeticError):
    """Relative entropy is infinite (absolute continuity violated).

    Raised instead of returning ``inf`` so that callers can tell an unusable
    operating point apart from one that carries zero information.
    """


class InfeasibleError(PieError):
    """The requested computation exceeds a hard size limit."""


class CertificationError(PieError):
    """A computed bound exceeded the exact mutual information."""
