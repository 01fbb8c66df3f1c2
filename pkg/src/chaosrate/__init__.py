"""Exact cumulants, rate laws and Monte Carlo checks for Hermite sums of stationary Gaussian sequences."""

from .covariance import CovarianceModel
from .cumulants import ChaosSumSpec, cumulant_report, kappa3, kappa4, variance_vn

__version__ = "0.1.0"

__all__ = [
    "ChaosSumSpec",
    "CovarianceModel",
    "cumulant_report",
    "kappa3",
    "kappa4",
    "variance_vn",
    "__version__",
]
