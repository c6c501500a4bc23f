"""Exception hierarchy shared by every module of the package."""


class GA0Error(Exception):
    """Base class. ``stage`` is filled in by the simulation pipeline."""

    stage: str | None = None


class DomainError(GA0Error, ValueError):
    """An argument lies outside the domain of the function."""


class InfiniteQuantileError(DomainError):
    """The requested quantile is at (or numerically indistinguishable from) 1."""


class InfiniteMomentError(DomainError):
    """The requested moment of the law does not exist for this roughness."""


class BracketError(DomainError):
    """The root bracket does not straddle a sign change."""


class NearSingularError(DomainError):
    """Gaussian correlation too close to +/-1 for the bivariate density."""


class NoMomentSolutionError(GA0Error, ValueError):
    """Sample moments cannot be matched by any admissible roughness."""


class QuadratureConsistencyError(GA0Error, RuntimeError):
    """A tabulated correlation map is not strictly increasing."""


class InfeasibleCorrelationError(GA0Error, ValueError):
    """Target correlation(s) lie outside the attainable range.

    Attributes:
        rho_min, rho_max: the attainable open interval.
        lags: offending ``(k, l)`` lags when raised for a whole grid.
    """

    def __init__(self, message, rho_min=None, rho_max=None, lags=()):
        super().__init__(message)
        self.rho_min = rho_min
        self.rho_max = rho_max
        self.lags = list(lags)


class InvalidCorrelationStructureError(GA0Error, ValueError):
    """The Gaussian correlation grid is not nonnegative definite on the torus."""


class NormalizationError(GA0Error, RuntimeError):
    """Spectral filtering left a non-negligible imaginary residue."""


class DegenerateVarianceError(GA0Error, ValueError):
    """A sample position has zero variance, so a correlation is undefined."""


class CorrelationFormatError(GA0Error, ValueError):
    """A correlation matrix file could not be parsed or validated."""
