"""Kalman filtering, RTS smoothing and the log marginal likelihood."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .discretize import DiscreteSystem

logger = logging.getLogger(__name__)

LOG_2PI = np.log(2.0 * np.pi)


class SingularModelError(np.linalg.LinAlgError):
    """Innovation covariance could not be factorized."""

    def __init__(self, msg, step=None):
        super().__init__(msg if step is None else f"{msg} (step {step})")
        self.step = step


@dataclass(frozen=True)
class GaussianState:
    mean: np.ndarray
    cov: np.ndarray


@dataclass(frozen=True)
class TimeSeriesData:
    """Inputs u_k = [T_a, u_1..u_D] and measurements y_k for k = 1..N.

    NaN entries in ``measurements`` mark sensor dropouts.
    """

    dt: float
    inputs: np.ndarray
    measurements: np.ndarray

    def __post_init__(self):
        u = np.atleast_2d(np.asarray(self.inputs, dtype=float))
        y = np.asarray(self.measurements, dtype=float)
        if y.ndim == 1:
            y = y[:, None]
        if u.shape[0] != y.shape[0]:
            raise ValueError(f"inputs ({u.shape[0]}) and measurements ({y.shape[0]}) differ in length")
        if u.shape[0] < 1:
            raise ValueError("need at least one sample")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        object.__setattr__(self, "inputs", u)
        object.__setattr__(self, "measurements", y)

    @property
    def n_steps(self) -> int:
        return self.inputs.shape[0]

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(1, self.n_steps + 1)

    @property
    def ambient(self) -> np.ndarray:
        return self.inputs[:, 0]


@dataclass
class SmootherResult:
    """Per-step moments, all arrays indexed k = 1..N along axis 0.

    ``initial`` is the smoothed prior at k = 0.
    """

    filtered_means: np.ndarray
    filtered_covs: np.ndarray
    predicted_means: np.ndarray
    predicted_covs: np.ndarray
    smoothed_means: np.ndarray
    smoothed_covs: np.ndarray
    initial: GaussianState
    log_marginal: float

    def _states(self, means, covs):
        return [GaussianState(m, S) for m, S in zip(means, covs)]

    @property
    def filtered(self) -> list[GaussianState]:
        return self._states(self.filtered_means, self.filtered_covs)

    @property
    def predicted(self) -> list[GaussianState]:
        return self._states(self.predicted_means, self.predicted_covs)

    @property
    def smoothed(self) -> list[GaussianState]:
        return self._states(self.smoothed_means, self.smoothed_covs)


def kf_predict(prev: GaussianState, sys: DiscreteSystem, u) -> GaussianState:
    A = sys.A
    mean = A @ prev.mean + sys.B @ np.asarray(u, dtype=float)
    cov = A @ prev.cov @ A.T + sys.Q
    return GaussianState(mean, 0.5 * (cov + cov.T))


def kf_update(pred: GaussianState, y, sys: DiscreteSystem) -> tuple[GaussianState, float]:
    """Correct with y; NaN components of y are treated as missing.

    Returns the posterior and log N(y; C m, C S C^T + R).
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    obs = ~np.isnan(y)
    if not obs.any():
        return pred, 0.0
    C, R = sys.C, sys.R
    if not obs.all():
        C, R, y = C[obs], R[np.ix_(obs, obs)], y[obs]
    return _correct(pred.mean, pred.cov, y, C, R)


def _correct(m, S, y, C, R, step=None):
    SCt = S @ C.T
    Sy = C @ SCt + R
    try:
        L = np.linalg.cholesky(Sy)
    except np.linalg.LinAlgError:
        raise SingularModelError("innovation covariance is not positive definite", step) from None
    v = y - C @ m
    # one solve for both the gain and the whitened residual
    sol = np.linalg.solve(Sy, np.column_stack([SCt.T, v]))
    K = sol[:, :-1].T
    alpha = sol[:, -1]
    mean = m + K @ v
    IKC = np.eye(S.shape[0]) - K @ C
    cov = IKC @ S @ IKC.T + K @ R @ K.T
    cov = 0.5 * (cov + cov.T)
    logdet = 2.0 * np.sum(np.log(np.diag(L)))
    log_ev = -0.5 * (v @ alpha + logdet + y.shape[0] * LOG_2PI)
    return GaussianState(mean, cov), float(log_ev)


def _filter(data: TimeSeriesData, sys: DiscreteSystem, store: bool):
    n = sys.state_dim
    N = data.n_steps
    A, B, Q, C, R = sys.A, sys.B, sys.Q, sys.C, sys.R
    AT = A.T
    Bu = data.inputs @ B.T
    Y = data.measurements
    if Y.shape[1] != sys.obs_dim:
        raise ValueError(f"measurements have {Y.shape[1]} columns, model observes {sys.obs_dim}")
    missing = np.isnan(Y)
    if store:
        pm = np.empty((N, n))
        pS = np.empty((N, n, n))
        fm = np.empty((N, n))
        fS = np.empty((N, n, n))
    m, S = sys.m0, sys.S0
    total = 0.0
    for k in range(N):
        m = A @ m + Bu[k]
        S = A @ S @ AT + Q
        S = 0.5 * (S + S.T)
        if store:
            pm[k] = m
            pS[k] = S
        obs = ~missing[k]
        if obs.all():
            post, ll = _correct(m, S, Y[k], C, R, step=k + 1)
        elif obs.any():
            post, ll = _correct(m, S, Y[k, obs], C[obs], R[np.ix_(obs, obs)], step=k + 1)
        else:
            post, ll = GaussianState(m, S), 0.0
        m, S = post.mean, post.cov
        total += ll
        if store:
            fm[k] = m
            fS[k] = S
    if store:
        return total, pm, pS, fm, fS
    return total


def log_marginal_likelihood(data: TimeSeriesData, sys: DiscreteSystem) -> float:
    """Forward pass only; sum of per-step log evidence."""
    return _filter(data, sys, store=False)


def _gain(S_filt, A, S_pred_next):
    # G = S_filt A^T S_pred_next^{-1}, via a symmetric solve
    rhs = A @ S_filt
    try:
        return np.linalg.solve(S_pred_next, rhs).T
    except np.linalg.LinAlgError:
        n = S_pred_next.shape[0]
        jitter = 1e-9 * max(np.trace(S_pred_next) / n, 1.0)
        logger.warning("singular predicted covariance in smoother, jitter %.3g", jitter)
        return np.linalg.solve(S_pred_next + jitter * np.eye(n), rhs).T


def rts_smooth(filtered_means, filtered_covs, predicted_means, predicted_covs, sys: DiscreteSystem):
    """Backward pass. Returns smoothed (means, covs) aligned with the inputs."""
    N = filtered_means.shape[0]
    ms = filtered_means.copy()
    Ss = filtered_covs.copy()
    A = sys.A
    for k in range(N - 2, -1, -1):
        G = _gain(filtered_covs[k], A, predicted_covs[k + 1])
        ms[k] = filtered_means[k] + G @ (ms[k + 1] - predicted_means[k + 1])
        Sk = filtered_covs[k] + G @ (Ss[k + 1] - predicted_covs[k + 1]) @ G.T
        Ss[k] = 0.5 * (Sk + Sk.T)
    return ms, Ss


def run_smoother(data: TimeSeriesData, sys: DiscreteSystem) -> SmootherResult:
    total, pm, pS, fm, fS = _filter(data, sys, store=True)
    ms, Ss = rts_smooth(fm, fS, pm, pS, sys)
    G0 = _gain(sys.S0, sys.A, pS[0])
    m0 = sys.m0 + G0 @ (ms[0] - pm[0])
    S0 = sys.S0 + G0 @ (Ss[0] - pS[0]) @ G0.T
    return SmootherResult(
        filtered_means=fm, filtered_covs=fS,
        predicted_means=pm, predicted_covs=pS,
        smoothed_means=ms, smoothed_covs=Ss,
        initial=GaussianState(m0, 0.5 * (S0 + S0.T)),
        log_marginal=float(total),
    )
