"""Grey-box identification of nonlinear convection in lumped heat-transfer models."""

__version__ = "0.1.0"

from .gp_sde import KernelHyperparams, SdeParams, kernel_eval, sde_params, spectral_density, stationary_prior
from .thermal_model import LumpedThermalModel, build_continuous_matrices, true_convection_surrogate
from .discretize import DiscreteSystem, build_state_space
from .smoother import GaussianState, SmootherResult, TimeSeriesData, run_smoother
from .hyperlaplace import GammaPrior, LaplacePosterior, ModelConfig, laplace_precision, map_estimate
from .regression import PolyBasis, PolyRegressionPosterior, fit, posterior_predictive, rhat

__all__ = [
    "DiscreteSystem", "GammaPrior", "GaussianState", "KernelHyperparams", "LaplacePosterior",
    "LumpedThermalModel", "ModelConfig", "PolyBasis", "PolyRegressionPosterior", "SdeParams",
    "SmootherResult", "TimeSeriesData", "build_continuous_matrices", "build_state_space", "fit",
    "kernel_eval", "laplace_precision", "map_estimate", "posterior_predictive", "rhat",
    "run_smoother", "sde_params", "spectral_density", "stationary_prior", "true_convection_surrogate",
]
