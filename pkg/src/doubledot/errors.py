"""Exception hierarchy shared by all modules."""


class DoubleDotError(Exception):
    """Base class for every error raised by this package."""


class SpecError(DoubleDotError, ValueError):
    """Invalid double-dot parametrization."""


class EnergyOutOfBand(DoubleDotError, ValueError):
    """Energy outside the open lead band (-2, 2)."""


class NotApplicable(DoubleDotError, ValueError):
    """Closed-form result requested for a system it does not cover."""


class NoSolution(DoubleDotError, ValueError):
    """A critical-parameter equation has no real solution."""


class OutOfBand(NoSolution):
    """The critical energy falls outside the band."""


class NoRootInBand(DoubleDotError):
    """No fixed point of the requested trajectory inside the band."""


class SingularResolvent(DoubleDotError, ArithmeticError):
    """E - H_eff could not be inverted."""


class DefectiveDecomposition(DoubleDotError, ArithmeticError):
    """Spectral sum requested at a (numerically) defective point."""


class NumericalFailure(DoubleDotError, ArithmeticError):
    """The eigensolver did not converge."""


class ZeroVector(DoubleDotError, ValueError):
    pass


class NoZeros(DoubleDotError, ValueError):
    """Transmission zeros requested for single-level dots."""


class UnknownFigure(DoubleDotError, KeyError):
    pass


class ConfigError(DoubleDotError, ValueError):
    """Malformed sweep or search configuration."""


class AmbiguousPair(DoubleDotError):
    """Closed-state labels could not be continued to the search seed."""
