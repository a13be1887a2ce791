"""Forward simulation of the nonlinear heat dynamics and synthetic data.

The ODE integrated here is

    dT/dt = M^-1 F T + M^-1 r(T, T_a) + M^-1 G [T_a, u]

with fixed-step RK4.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .discretize import build_linear_state_space
from .regression import PolyRegressionPosterior
from .smoother import TimeSeriesData, run_smoother
from .thermal_model import LumpedThermalModel, build_continuous_matrices, true_convection_surrogate

# r(T, T_a) -> W per component, T a D-vector and T_a a scalar
ConvectionFn = Callable[[np.ndarray, float], np.ndarray]


class IntegrationBlowup(ArithmeticError):
    def __init__(self, step):
        super().__init__(f"non-finite state at step {step}")
        self.step = step


@dataclass(frozen=True)
class HeatPulse:
    """Constant power to one component on [start, stop)."""

    component: int
    power: float
    start: float = 0.0
    stop: float = np.inf


@dataclass(frozen=True)
class SimulationScenario:
    model: LumpedThermalModel
    T0: np.ndarray
    ambient: float | np.ndarray
    heat_input: Sequence[HeatPulse]
    dt: float
    n_steps: int
    noise_var: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.n_steps < 1:
            raise ValueError("n_steps must be >= 1")
        if self.noise_var < 0:
            raise ValueError("noise_var must be >= 0")
        T0 = np.broadcast_to(np.asarray(self.T0, dtype=float), (self.model.n_components,)).copy()
        object.__setattr__(self, "T0", T0)
        amb = np.asarray(self.ambient, dtype=float)
        if amb.ndim == 1 and amb.shape[0] != self.n_steps + 1:
            raise ValueError("an ambient series needs n_steps + 1 samples (t = 0..N dt)")
        object.__setattr__(self, "heat_input", tuple(self.heat_input))

    @property
    def times(self) -> np.ndarray:
        """Sample instants t_1..t_N."""
        return self.dt * np.arange(1, self.n_steps + 1)

    def ambient_at(self, t: float) -> float:
        amb = np.asarray(self.ambient, dtype=float)
        if amb.ndim == 0:
            return float(amb)
        # zero-order hold between samples
        k = min(int(np.floor(t / self.dt + 1e-9)), amb.shape[0] - 1)
        return float(amb[k])

    def heat_at(self, t: float) -> np.ndarray:
        u = np.zeros(self.model.n_components)
        for p in self.heat_input:
            if p.start <= t < p.stop:
                u[p.component] += p.power
        return u

    def input_at(self, t: float) -> np.ndarray:
        return np.concatenate([[self.ambient_at(t)], self.heat_at(t)])

    def input_series(self) -> np.ndarray:
        """Inputs [T_a, u_1..u_D] for steps k = 1..N, shape (N, D+1).

        Row k is the input held over (t_{k-1}, t_k], i.e. its value at t_{k-1}.
        """
        return np.array([self.input_at(t) for t in self.times - self.dt])


def zero_convection(T, T_a):
    return np.zeros_like(np.asarray(T, dtype=float))


def true_convection(T, T_a):
    return true_convection_surrogate(T, T_a)


def identified_convection(posteriors: Sequence[PolyRegressionPosterior]) -> ConvectionFn:
    """Per-component posterior-mean convection r_hat."""
    mus = [p.mu for p in posteriors]
    basis = posteriors[0].basis

    def conv(T, T_a):
        phi = basis(T, T_a)
        return np.array([phi[i] @ mus[i] for i in range(len(mus))])

    return conv


def polynomial_convection(coefficients: np.ndarray) -> ConvectionFn:
    """Per-component polynomial in (T_a - T); rows are increasing-power coefficients."""
    coef = np.atleast_2d(np.asarray(coefficients, dtype=float))

    def conv(T, T_a):
        d = T_a - np.asarray(T, dtype=float)
        return np.array([np.polynomial.polynomial.polyval(d[i], coef[i]) for i in range(coef.shape[0])])

    return conv


def simulate(scenario: SimulationScenario, conv: ConvectionFn, substeps: int | None = None) -> np.ndarray:
    """RK4 trajectory of temperatures at t_1..t_N, shape (N, D)."""
    model = scenario.model
    mats = build_continuous_matrices(model)
    Minv = 1.0 / model.heat_capacity
    MF = Minv[:, None] * mats.F
    MG = Minv[:, None] * mats.G
    dt = scenario.dt
    if substeps is None:
        substeps = 10 if np.linalg.norm(MF, 2) * dt > 0.1 else 1
    h = dt / substeps

    def rhs(T, u):
        return MF @ T + Minv * conv(T, u[0]) + MG @ u

    T = scenario.T0.copy()
    out = np.empty((scenario.n_steps, model.n_components))
    for k in range(scenario.n_steps):
        # inputs are held over each sampling interval, matching the discrete model
        u = scenario.input_at(k * dt)
        with np.errstate(over="ignore", invalid="ignore"):
            for _ in range(substeps):
                k1 = rhs(T, u)
                k2 = rhs(T + h / 2 * k1, u)
                k3 = rhs(T + h / 2 * k2, u)
                k4 = rhs(T + h * k3, u)
                T = T + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(T)):
            raise IntegrationBlowup(k + 1)
        out[k] = T
    return out


def synthesize_measurements(scenario: SimulationScenario, trajectory: np.ndarray,
                            noise_var: float | None = None, seed: int | None = None) -> TimeSeriesData:
    """y_k = T_k + eps_k, eps ~ N(0, noise_var I), using a seeded generator."""
    noise_var = scenario.noise_var if noise_var is None else noise_var
    seed = scenario.seed if seed is None else seed
    if noise_var < 0:
        raise ValueError("noise_var must be >= 0")
    rng = np.random.default_rng(seed)
    y = trajectory + np.sqrt(noise_var) * rng.standard_normal(trajectory.shape)
    return TimeSeriesData(dt=scenario.dt, inputs=scenario.input_series(), measurements=y)


@dataclass
class ValidationResult:
    times: np.ndarray
    reference: np.ndarray
    trajectory: np.ndarray
    abs_error: np.ndarray = field(init=False)
    rmse: float = field(init=False)

    def __post_init__(self):
        self.abs_error = np.abs(self.reference - self.trajectory)
        self.rmse = float(np.sqrt(np.mean(self.abs_error**2)))


def validate_forward(conv_identified: ConvectionFn, scenario_val: SimulationScenario,
                     conv_true: ConvectionFn = true_convection) -> ValidationResult:
    """Simulate with the identified and the true convection and compare."""
    ref = simulate(scenario_val, conv_true)
    traj = simulate(scenario_val, conv_identified)
    return ValidationResult(times=scenario_val.times, reference=ref, trajectory=traj)


@dataclass
class BaselineResult:
    smoothed_temps: np.ndarray
    residuals: np.ndarray
    coefficients: np.ndarray
    validation: ValidationResult | None


def residual_baseline(data: TimeSeriesData, model: LumpedThermalModel, m0_temps, S0_temps, R,
                      scenario_val: SimulationScenario | None = None, order: int = 3,
                      q: float = 1e-12) -> BaselineResult:
    """Offline alternative: fit polynomials to residuals of a convection-free model.

    All temperatures must be measured. The fitted residual polynomials (degC,
    regressed on T_a - T) are injected into the ODE as if they were r.
    """
    D = model.n_components
    if data.measurements.shape[1] != D:
        raise ValueError("residual baseline needs every component measured")
    sys = build_linear_state_space(model, np.eye(D), R, m0_temps, S0_temps, data.dt, q=q)
    res = run_smoother(data, sys)
    temps = res.smoothed_means
    residuals = data.measurements - temps
    d = data.ambient[:, None] - temps
    coef = np.empty((D, order + 1))
    for i in range(D):
        ok = ~np.isnan(residuals[:, i])
        coef[i] = np.polynomial.polynomial.polyfit(d[ok, i], residuals[ok, i], order)
    val = None
    if scenario_val is not None:
        val = validate_forward(polynomial_convection(coef), scenario_val)
    return BaselineResult(smoothed_temps=temps, residuals=residuals, coefficients=coef, validation=val)
