"""Exception types shared across the package."""


class QGrowthError(Exception):
    """Base class for all package errors."""


class DomainError(QGrowthError, ValueError):
    """A field was evaluated outside the region where it is defined."""


class OrderError(QGrowthError, ValueError):
    """A derivative order outside the supported range was requested."""


class UnsupportedDimension(QGrowthError, ValueError):
    pass


class EmptyInput(QGrowthError, ValueError):
    pass


class LorentzIndexError(QGrowthError, IndexError):
    """Lorentz indices outside 1 < p < inf, 1 <= q <= inf."""


class ToleranceNotMet(QGrowthError, RuntimeError):
    """The panel budget ran out before the tail converged or diverged."""


class FamilyMismatch(QGrowthError, ValueError):
    pass


class SupportError(QGrowthError, ValueError):
    """A test bump reaches outside the domain of the field."""


class NonIntegrableSource(QGrowthError, ValueError):
    pass
