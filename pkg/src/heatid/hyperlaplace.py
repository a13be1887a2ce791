"""MAP estimation of kernel hyperparameters and a Laplace posterior."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import minimize
from scipy.special import gammaln

from .discretize import build_state_space
from .gp_sde import KernelHyperparams
from .smoother import TimeSeriesData, log_marginal_likelihood
from .thermal_model import LumpedThermalModel

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GammaPrior:
    """Gamma distribution in shape-rate form (mean alpha / beta)."""

    alpha: float
    beta: float

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise ValueError("Gamma prior needs alpha > 0 and beta > 0")

    def logpdf(self, x: float) -> float:
        if x <= 0:
            return -np.inf
        a, b = self.alpha, self.beta
        return a * np.log(b) - gammaln(a) + (a - 1) * np.log(x) - b * x

    @property
    def mode(self) -> float:
        return max(self.alpha - 1, 0.0) / self.beta


@dataclass(frozen=True)
class ModelConfig:
    """Everything except psi needed to build the state-space model."""

    model: LumpedThermalModel
    C: np.ndarray
    R: np.ndarray
    m0_temps: np.ndarray
    S0_temps: np.ndarray

    def system(self, psi: KernelHyperparams, dt: float):
        return build_state_space(self.model, psi, self.C, self.R, self.m0_temps, self.S0_temps, dt)


@dataclass
class LaplacePosterior:
    psi_hat: KernelHyperparams
    precision: np.ndarray
    covariance: np.ndarray | None
    reliable: bool
    log_posterior: float = np.nan
    log_marginal: float = np.nan

    @property
    def std(self) -> np.ndarray:
        if self.covariance is None:
            return np.full(2, np.nan)
        return np.sqrt(np.diag(self.covariance))

    @property
    def coefficient_of_variation(self) -> np.ndarray:
        return self.std / self.psi_hat.as_array()

    def logpdf(self, psi) -> float:
        diff = np.asarray(psi, dtype=float) - self.psi_hat.as_array()
        _, logdet = np.linalg.slogdet(self.precision)
        return float(-0.5 * diff @ self.precision @ diff + 0.5 * logdet - np.log(2 * np.pi))


@dataclass
class MapResult:
    psi: KernelHyperparams
    log_posterior: float
    converged: bool
    n_evals: int
    history: list = field(default_factory=list, repr=False)


def log_prior(psi: KernelHyperparams, priors: tuple[GammaPrior, GammaPrior]) -> float:
    return priors[0].logpdf(psi.gamma) + priors[1].logpdf(psi.length)


def log_posterior(psi: KernelHyperparams, data: TimeSeriesData, config: ModelConfig,
                  priors: tuple[GammaPrior, GammaPrior]) -> float:
    """Log marginal likelihood plus Gamma log priors (up to the evidence constant)."""
    try:
        ll = log_marginal_likelihood(data, config.system(psi, data.dt))
    except (np.linalg.LinAlgError, FloatingPointError, ValueError) as exc:
        logger.debug("smoother failed at %s: %s", psi, exc)
        return -np.inf
    if not np.isfinite(ll):
        return -np.inf
    return ll + log_prior(psi, priors)


def map_estimate(data: TimeSeriesData, config: ModelConfig, priors: tuple[GammaPrior, GammaPrior],
                 init_psi: KernelHyperparams, xatol: float = 1e-4, max_evals: int = 500,
                 objective: Callable[[KernelHyperparams], float] | None = None) -> MapResult:
    """Nelder-Mead on (ln gamma, ln l).

    ``objective`` overrides the log posterior (used in tests).
    """
    if objective is None:
        def objective(psi):
            return log_posterior(psi, data, config, priors)

    history = []

    def neg(z):
        psi = KernelHyperparams(*np.exp(z))
        val = objective(psi)
        history.append((psi.gamma, psi.length, val))
        return -val if np.isfinite(val) else 1e300

    z0 = np.log(init_psi.as_array())
    res = minimize(neg, z0, method="Nelder-Mead",
                   options={"xatol": xatol, "fatol": np.inf, "maxfev": max_evals,
                            "initial_simplex": np.array([z0, z0 + [0.5, 0.0], z0 + [0.0, 0.5]])})
    if not res.success:
        logger.warning("MAP search did not converge: %s", res.message)
    psi = KernelHyperparams(*np.exp(res.x))
    return MapResult(psi=psi, log_posterior=float(-res.fun), converged=bool(res.success),
                     n_evals=int(res.nfev), history=history)


def fd_hessian(f: Callable[[np.ndarray], float], x, rel_step: float = 1e-3, abs_floor: float = 1e-6) -> np.ndarray:
    """Central-difference Hessian of a scalar function, symmetrized."""
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    h = np.maximum(rel_step * np.abs(x), abs_floor)
    f0 = f(x)
    H = np.empty((n, n))
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = h[i]
        H[i, i] = (f(x + ei) - 2 * f0 + f(x - ei)) / h[i] ** 2
        for j in range(i + 1, n):
            ej = np.zeros(n)
            ej[j] = h[j]
            H[i, j] = (f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej) + f(x - ei - ej)) / (4 * h[i] * h[j])
            H[j, i] = H[i, j]
    return H


def laplace_from_objective(psi_hat: KernelHyperparams, objective: Callable[[KernelHyperparams], float],
                           rel_step: float = 1e-3, abs_floor: float = 1e-6) -> LaplacePosterior:
    """Precision = -Hessian of the log posterior in (gamma, l) coordinates."""
    H = fd_hessian(lambda x: objective(KernelHyperparams.from_array(x)), psi_hat.as_array(), rel_step, abs_floor)
    precision = -H
    precision = 0.5 * (precision + precision.T)
    eig = np.linalg.eigvalsh(precision)
    reliable = bool(np.all(eig > 0) and np.all(np.isfinite(precision)))
    cov = None
    if reliable:
        cov = np.linalg.inv(precision)
        cov = 0.5 * (cov + cov.T)
    else:
        logger.warning("Laplace precision not positive definite (eigenvalues %s)", eig)
    return LaplacePosterior(psi_hat=psi_hat, precision=precision, covariance=cov, reliable=reliable,
                            log_posterior=float(objective(psi_hat)))


def laplace_precision(psi_hat: KernelHyperparams, data: TimeSeriesData, config: ModelConfig,
                      priors: tuple[GammaPrior, GammaPrior], rel_step: float = 1e-3,
                      abs_floor: float = 1e-6) -> LaplacePosterior:
    post = laplace_from_objective(psi_hat, lambda psi: log_posterior(psi, data, config, priors),
                                  rel_step, abs_floor)
    post.log_marginal = post.log_posterior - log_prior(psi_hat, priors)
    return post
