"""Augmented temperature + latent-force state-space model in discrete time."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .gp_sde import KernelHyperparams, SdeParams, sde_params
from .thermal_model import ContinuousThermalMatrices, LumpedThermalModel, build_continuous_matrices

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AugmentedContinuous:
    """Continuous-time drift of x = [T; rho], input map and noise selector."""

    drift: np.ndarray
    input: np.ndarray
    noise_load: np.ndarray
    v_c: float


@dataclass(frozen=True)
class DiscreteSystem:
    """x_k = A x_{k-1} + B u_k + w_k,  y_k = C x_k + e_k."""

    A: np.ndarray
    B: np.ndarray
    Q: np.ndarray
    C: np.ndarray
    R: np.ndarray
    m0: np.ndarray
    S0: np.ndarray
    dt: float

    @property
    def state_dim(self) -> int:
        return self.A.shape[0]

    @property
    def obs_dim(self) -> int:
        return self.C.shape[0]

    def __post_init__(self):
        n = self.A.shape[0]
        shapes = {
            "A": (self.A.shape, (n, n)),
            "Q": (self.Q.shape, (n, n)),
            "S0": (self.S0.shape, (n, n)),
            "m0": (self.m0.shape, (n,)),
        }
        for name, (got, want) in shapes.items():
            if got != want:
                raise ValueError(f"{name} has shape {got}, expected {want}")
        if self.B.shape[0] != n:
            raise ValueError(f"B must have {n} rows, got {self.B.shape}")
        p = self.C.shape[0]
        if self.C.shape != (p, n) or self.R.shape != (p, p):
            raise ValueError(f"C {self.C.shape} / R {self.R.shape} inconsistent with state dim {n}")


def augment(
    matrices: ContinuousThermalMatrices, model: LumpedThermalModel, sde: SdeParams
) -> AugmentedContinuous:
    d = model.n_components
    if matrices.F.shape != (d, d) or matrices.G.shape != (d, d + 1):
        raise ValueError("thermal matrices do not match the model dimension")
    Minv = model.M_inv
    drift = np.zeros((2 * d, 2 * d))
    drift[:d, :d] = Minv @ matrices.F
    drift[:d, d:] = Minv
    drift[d:, d:] = -sde.lam * np.eye(d)
    inp = np.vstack([Minv @ matrices.G, np.zeros((d, d + 1))])
    load = np.vstack([np.zeros((d, d)), np.eye(d)])
    return AugmentedContinuous(drift=drift, input=inp, noise_load=load, v_c=sde.v_c)


def discretize_system(aug: AugmentedContinuous, dt: float) -> tuple[np.ndarray, np.ndarray]:
    """A = expm(dt * drift) (Pade scaling-and-squaring), B = dt * input."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    return expm(dt * aug.drift), dt * aug.input


def process_noise_Q(dt: float, sde: SdeParams, model: LumpedThermalModel) -> np.ndarray:
    """Process noise from a first-order Taylor expansion of the noise integral.

    The upper-left block is (1/3) dt^3 v_c M^-1 M^-T, which is what the
    expansion (I + A t) [0; I] actually produces.
    """
    d = model.n_components
    Minv = model.M_inv
    lam, vc = sde.lam, sde.v_c
    Q = np.empty((2 * d, 2 * d))
    Q[:d, :d] = dt**3 / 3.0 * vc * Minv @ Minv.T
    Q[:d, d:] = (dt**2 / 2.0 - lam * dt**3 / 3.0) * vc * Minv
    Q[d:, :d] = Q[:d, d:].T
    Q[d:, d:] = (dt - lam * dt**2 + lam**2 * dt**3 / 3.0) * vc * np.eye(d)
    return make_psd(Q)


def make_psd(Q: np.ndarray) -> np.ndarray:
    Q = 0.5 * (Q + Q.T)
    try:
        np.linalg.cholesky(Q)
    except np.linalg.LinAlgError:
        n = Q.shape[0]
        jitter = 1e-12 * max(np.trace(Q), 0.0) / n
        logger.debug("process noise not PD, adding jitter %.3g", jitter)
        Q = Q + jitter * np.eye(n)
    return Q


def temperature_selector(n_components: int, measured=None) -> np.ndarray:
    """C picking the measured temperatures out of x = [T; rho]."""
    measured = range(n_components) if measured is None else list(measured)
    C = np.zeros((len(measured), 2 * n_components))
    for row, i in enumerate(measured):
        C[row, i] = 1.0
    return C


def build_state_space(
    model: LumpedThermalModel,
    psi: KernelHyperparams,
    C,
    R,
    m0_temps,
    S0_temps,
    dt: float,
) -> DiscreteSystem:
    d = model.n_components
    sde = sde_params(psi)
    aug = augment(build_continuous_matrices(model), model, sde)
    A, B = discretize_system(aug, dt)
    Q = process_noise_Q(dt, sde, model)
    m0 = np.concatenate([np.asarray(m0_temps, dtype=float), np.zeros(d)])
    S0 = np.zeros((2 * d, 2 * d))
    S0[:d, :d] = np.asarray(S0_temps, dtype=float)
    S0[d:, d:] = psi.gamma**2 * np.eye(d)
    return DiscreteSystem(
        A=A, B=B, Q=Q, C=np.atleast_2d(np.asarray(C, dtype=float)),
        R=np.atleast_2d(np.asarray(R, dtype=float)), m0=m0, S0=S0, dt=float(dt),
    )


def build_linear_state_space(
    model: LumpedThermalModel, C, R, m0_temps, S0_temps, dt: float, q: float = 1e-12
) -> DiscreteSystem:
    """Temperature-only model without latent force states, Q = q I.

    Used by the residual baseline; C must index temperatures directly (p x D).
    """
    mats = build_continuous_matrices(model)
    Minv = model.M_inv
    A = expm(dt * Minv @ mats.F)
    B = dt * Minv @ mats.G
    d = model.n_components
    return DiscreteSystem(
        A=A, B=B, Q=q * np.eye(d), C=np.atleast_2d(np.asarray(C, dtype=float)),
        R=np.atleast_2d(np.asarray(R, dtype=float)),
        m0=np.asarray(m0_temps, dtype=float), S0=np.asarray(S0_temps, dtype=float), dt=float(dt),
    )
