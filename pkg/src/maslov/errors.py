"""Exception hierarchy.

Every error raised on purpose by the library derives from ``MaslovError`` so
callers (the CLI in particular) can map failures onto exit codes without
catching unrelated bugs.
"""


class MaslovError(Exception):
    """Base class for library errors."""


class InputError(MaslovError, ValueError):
    """Malformed or inconsistent input (dimensions, signs, parse errors)."""


class DimensionError(InputError):
    pass


class NonSymmetricError(InputError):
    pass


class NonSymplecticError(InputError):
    pass


class ProblemFileError(InputError):
    pass


class NumericalError(MaslovError, ArithmeticError):
    """A numerical procedure could not meet its contract."""


class OffManifoldError(NumericalError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class EndpointCausticError(NumericalError):
    pass


class NonGenericCausticError(NumericalError):
    """Kernel of E has dimension > 1, or the crossing derivative vanishes."""


class GridTooCoarseError(NumericalError):
    pass


class NotACausticError(NumericalError):
    pass


class CoincidentCheckError(NumericalError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class OracleError(NumericalError):
    pass


class OracleNotApplicableError(OracleError):
    pass


class CorruptInputError(NumericalError):
    pass


class HomotopyInvarianceError(NumericalError):
    def __init__(self, message, stage=None, integrals=None):
        super().__init__(message)
        self.stage = stage
        self.integrals = integrals


class ExactnessError(NumericalError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class UnsupportedError(MaslovError, NotImplementedError):
    pass


class TurningPointError(NumericalError):
    pass


class BracketError(NumericalError):
    pass


class ResolutionError(NumericalError):
    """A grid does not resolve the requested eigenfunctions or tails."""


class ForbiddenRegionError(MaslovError, ValueError):
    """Edge lengths admit no real tetrahedron (classically forbidden)."""


class CausticQueryError(NumericalError):
    """An asymptotic value was requested on a caustic."""
