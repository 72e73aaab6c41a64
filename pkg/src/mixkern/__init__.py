"""Matérn mixture and separable multi-output Gaussian processes.

Kernels, exact GP inference, maximum-likelihood fitting, spectral
identifiability diagnostics, and seeded simulation drivers.
"""
__version__ = "0.1.0"

from .errors import MixkernError
from .kernels import RBF, Matern, Mixture, Nugget, Separable, eval_kernel, gram_gradient, gram_matrix
from .gp import GpModel, Posterior, log_marginal_likelihood, lml_gradient, mse, posterior_predict, sample_prior
from .optimize import FitReport, OptimizerConfig, fit
from .spectral import equivalence_diagnostic, microergodic, moment_integral_diagnostic, smoothness_order

__all__ = [
    "MixkernError",
    "Matern",
    "RBF",
    "Mixture",
    "Separable",
    "Nugget",
    "eval_kernel",
    "gram_matrix",
    "gram_gradient",
    "GpModel",
    "Posterior",
    "log_marginal_likelihood",
    "lml_gradient",
    "posterior_predict",
    "sample_prior",
    "mse",
    "OptimizerConfig",
    "FitReport",
    "fit",
    "microergodic",
    "smoothness_order",
    "moment_integral_diagnostic",
    "equivalence_diagnostic",
]
