"""Exception types shared across the solver, prolongation, and data pipeline."""


class MgsrError(Exception):
    """Base class for all package errors."""


class ShapeError(MgsrError):
    """Grid / window dimensions are incompatible with the requested operation."""


class ConfigurationError(MgsrError):
    """Solver or pipeline configuration is internally inconsistent."""


class InputError(MgsrError):
    """Input values are outside the operation's domain (non-finite, out of range)."""


class WeightsError(MgsrError):
    """A weights container does not match its declared architecture."""


class NumericalError(MgsrError):
    """A linear-algebra subproblem failed (e.g. rank-deficient normal equations)."""


class DivergenceError(MgsrError):
    """Time integration produced non-finite values."""
