"""Simulation of spatially correlated G_A^0 clutter.

Correlated Gaussian noise is shaped by a spectral mask and pushed through the
G_A^0 quantile function, after the Gaussian correlations have been chosen so
that the transformed field has the requested lag correlations.
"""

from .corr_map import CorrMapKey, build_lookup, feasible_range, rho_of_tau, tau_of_rho
from .corr_models import MatrixCorr, ParametricCorr, pearson_estimate
from .field_gen import SimulationConfig, simulate, simulate_stages
from .ga0 import GA0Params, cdf, fit_moments, moment, normalizing_scale, pdf, quantile

__version__ = "0.1.0"

__all__ = [
    "CorrMapKey", "GA0Params", "MatrixCorr", "ParametricCorr", "SimulationConfig",
    "build_lookup", "cdf", "feasible_range", "fit_moments", "moment", "normalizing_scale",
    "pdf", "pearson_estimate", "quantile", "rho_of_tau", "simulate", "simulate_stages",
    "tau_of_rho",
]
