"""Exception hierarchy.

Every domain failure raised by the library derives from :class:`QStokesError`;
the command line reports the class name verbatim.
"""


class QStokesError(Exception):
    """Base class for all domain errors."""


class DimensionMismatch(QStokesError, ValueError):
    pass


class EmptyWindow(QStokesError, ValueError):
    pass


class WindowExhausted(QStokesError):
    pass


class ResonantSylvester(QStokesError):
    """The Sylvester operator is singular to tolerance."""

    def __init__(self, message, lam=None, sigma_min=None):
        super().__init__(message)
        self.lam = lam
        self.sigma_min = sigma_min


class NotUnipotent(QStokesError, ValueError):
    pass


class NotNilpotent(QStokesError, ValueError):
    pass


class ZeroArgument(QStokesError, ValueError):
    pass


class InvalidSystem(QStokesError, ValueError):
    pass


class IllConditionedEigenproblem(QStokesError):
    pass


class ResonantDirection(QStokesError):
    """A summation direction lies (to margin) on the resonance set."""

    def __init__(self, message, witness=None, distance=None):
        super().__init__(message)
        self.witness = witness
        self.distance = distance


class OnPoleSpiral(QStokesError, ValueError):
    pass


class GradedMismatch(QStokesError, ValueError):
    pass


class BasepointOnSpiral(QStokesError, ValueError):
    pass


class InsufficientData(QStokesError, ValueError):
    pass


class DunfordFailure(QStokesError):
    pass


class MissingCharacterValue(QStokesError, KeyError):
    pass


class ContourHitsResonance(QStokesError):
    pass


class BasepointIncompatible(QStokesError):
    pass


class QuadratureNotConverged(QStokesError):
    pass


class UnsupportedGaugeSearch(QStokesError, NotImplementedError):
    pass


class SingularTransferMap(QStokesError):
    pass


class TargetOutsideRange(QStokesError):
    pass


class SpecParseError(QStokesError):
    """Malformed system, config or target file."""

    def __init__(self, message, line=None, column=None):
        loc = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + loc)
        self.line = line
        self.column = column
