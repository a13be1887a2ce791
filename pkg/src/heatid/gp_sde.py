"""Exponential covariance function and its first-order SDE form.

The kernel is gamma^2 exp(-lambda |t - t'|) with lambda = sqrt(3) / l. Its
state-space dual is d rho = -lambda rho dt + dw where the white noise w has
spectral density v_c = 2 lambda gamma^2, so the stationary variance is gamma^2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SQRT3 = np.sqrt(3.0)


@dataclass(frozen=True)
class KernelHyperparams:
    gamma: float
    length: float

    def __post_init__(self):
        if not (self.gamma > 0 and self.length > 0):
            raise ValueError(f"hyperparameters must be positive, got gamma={self.gamma}, length={self.length}")
        object.__setattr__(self, "gamma", float(self.gamma))
        object.__setattr__(self, "length", float(self.length))

    def as_array(self) -> np.ndarray:
        return np.array([self.gamma, self.length])

    @classmethod
    def from_array(cls, arr) -> "KernelHyperparams":
        return cls(float(arr[0]), float(arr[1]))


@dataclass(frozen=True)
class SdeParams:
    lam: float
    v_c: float


def decay_rate(length: float) -> float:
    return SQRT3 / length


def kernel_eval(psi: KernelHyperparams, t, t2):
    return psi.gamma**2 * np.exp(-decay_rate(psi.length) * np.abs(np.asarray(t) - np.asarray(t2)))


def kernel_matrix(psi: KernelHyperparams, t, t2=None) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    t2 = t if t2 is None else np.asarray(t2, dtype=float)
    return kernel_eval(psi, t[:, None], t2[None, :])


def spectral_density(psi: KernelHyperparams, omega):
    lam = decay_rate(psi.length)
    return 2.0 * lam * psi.gamma**2 / (lam**2 + np.asarray(omega) ** 2)


def sde_params(psi: KernelHyperparams) -> SdeParams:
    lam = decay_rate(psi.length)
    return SdeParams(lam=lam, v_c=2.0 * lam * psi.gamma**2)


def stationary_prior(psi: KernelHyperparams) -> tuple[float, float]:
    """(mean, variance) of each GP state at k = 0."""
    return 0.0, psi.gamma**2


def gp_transition(psi: KernelHyperparams, dt: float) -> tuple[float, float]:
    """Exact scalar discretization (a, q) of the SDE over a step dt.

    a = exp(-lambda dt), q = gamma^2 (1 - a^2), which keeps the stationary
    variance at gamma^2.
    """
    a = float(np.exp(-decay_rate(psi.length) * dt))
    return a, psi.gamma**2 * (1.0 - a * a)
