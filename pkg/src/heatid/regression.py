"""Conjugate Bayesian polynomial regression of latent forces on temperatures.

Features are powers of the ambient-minus-component temperature difference,
phi(T, T_a) = [d, d^2, ..., d^p] with d = T_a - T. There is no intercept, so
the fitted convection vanishes when the component sits at ambient.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PolyBasis:
    order: int = 3

    def __post_init__(self):
        if self.order < 1:
            raise ValueError("polynomial order must be >= 1")

    @property
    def feature_dim(self) -> int:
        return self.order

    def __call__(self, T, T_a) -> np.ndarray:
        """Feature matrix of shape (..., order)."""
        d = np.asarray(T_a, dtype=float) - np.asarray(T, dtype=float)
        return d[..., None] ** np.arange(1, self.order + 1)


@dataclass(frozen=True)
class PolyRegressionPosterior:
    mu: np.ndarray
    sigma_cov: np.ndarray
    noise_var: float
    basis: PolyBasis

    def to_dict(self) -> dict:
        return {
            "order": self.basis.order,
            "mu": self.mu.tolist(),
            "sigma_cov": self.sigma_cov.tolist(),
            "noise_var": self.noise_var,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PolyRegressionPosterior":
        return cls(
            mu=np.asarray(d["mu"], dtype=float),
            sigma_cov=np.asarray(d["sigma_cov"], dtype=float),
            noise_var=float(d["noise_var"]),
            basis=PolyBasis(int(d["order"])),
        )


def noise_variance(gp_state_variances) -> float:
    """Average smoothed variance of one GP state over time."""
    v = np.asarray(gp_state_variances, dtype=float)
    if v.size == 0:
        raise ValueError("need at least one variance")
    return float(v.mean())


def _cholesky(P: np.ndarray, what: str):
    P = 0.5 * (P + P.T)
    try:
        return cho_factor(P, lower=True)
    except np.linalg.LinAlgError:
        n = P.shape[0]
        jitter = 1e-10 * max(np.trace(P) / n, 1.0)
        logger.warning("%s not positive definite, adding jitter %.3g", what, jitter)
        return cho_factor(P + jitter * np.eye(n), lower=True)


def fit(T, T_a, targets, prior_mean, prior_cov, noise_var: float, basis: PolyBasis) -> PolyRegressionPosterior:
    """Exact Gaussian posterior over the coefficients.

    Sigma = (Sigma0^-1 + s^-2 sum phi phi^T)^-1,
    mu = Sigma (s^-2 sum phi y + Sigma0^-1 mu0).
    """
    if not noise_var > 0:
        raise ValueError("noise_var must be positive")
    T = np.atleast_1d(np.asarray(T, dtype=float))
    Phi = basis(T, np.broadcast_to(T_a, T.shape))
    y = np.atleast_1d(np.asarray(targets, dtype=float))
    mu0 = np.asarray(prior_mean, dtype=float)
    S0 = np.asarray(prior_cov, dtype=float)
    n = mu0.shape[0]
    prior_fac = _cholesky(S0, "regression prior covariance")
    P0 = cho_solve(prior_fac, np.eye(n))
    precision = P0 + Phi.T @ Phi / noise_var
    fac = _cholesky(precision, "regression posterior precision")
    # mu = Sigma (Phi^T y / s^2 + Sigma0^-1 mu0), without forming Sigma first
    mu = cho_solve(fac, Phi.T @ y / noise_var + cho_solve(prior_fac, mu0))
    cov = cho_solve(fac, np.eye(n))
    return PolyRegressionPosterior(mu=mu, sigma_cov=0.5 * (cov + cov.T), noise_var=float(noise_var), basis=basis)


def posterior_predictive(post: PolyRegressionPosterior, T_star, T_a_star):
    """Predictive (mean, variance) at query temperatures."""
    phi = post.basis(T_star, T_a_star)
    mean = phi @ post.mu
    var = np.einsum("...i,ij,...j->...", phi, post.sigma_cov, phi) + post.noise_var
    return mean, var


def rhat(post: PolyRegressionPosterior, T_star, T_a_star):
    return post.basis(T_star, T_a_star) @ post.mu


def fit_components(result_means, result_covs, ambient, n_components: int, basis: PolyBasis,
                   prior_mean=None, prior_cov=None) -> list[PolyRegressionPosterior]:
    """One regression per component from smoothed states x = [T; rho].

    Regressors are smoothed temperature means, targets the smoothed GP-state
    means; the noise variance is the time-averaged GP-state variance.
    """
    D = n_components
    mu0 = np.zeros(basis.feature_dim) if prior_mean is None else np.asarray(prior_mean, dtype=float)
    S0 = 1e3 * np.eye(basis.feature_dim) if prior_cov is None else np.asarray(prior_cov, dtype=float)
    posts = []
    for i in range(D):
        j = i + D
        s2 = noise_variance(result_covs[:, j, j])
        posts.append(fit(result_means[:, i], ambient, result_means[:, j], mu0, S0, s2, basis))
    return posts
