"""Run configuration: JSON loading, schema validation and typed access."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .discretize import temperature_selector
from .gp_sde import KernelHyperparams
from .hyperlaplace import GammaPrior, ModelConfig
from .regression import PolyBasis
from .simulator import HeatPulse, SimulationScenario
from .thermal_model import LumpedThermalModel, chain_conductance


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


def load_schema() -> dict:
    return json.loads(resources.files("heatid").joinpath("config_schema.json").read_text())


def config_hash(raw: dict) -> str:
    canonical = json.dumps(raw, sort_keys=True, separators=(",", ":"))
    return "sha256:" + hashlib.sha256(canonical.encode()).hexdigest()


@dataclass
class RunConfig:
    raw: dict
    model: LumpedThermalModel
    priors: tuple[GammaPrior, GammaPrior]
    init_psi: KernelHyperparams
    measured: list[int]
    R: np.ndarray
    m0_temps: np.ndarray
    S0_temps: np.ndarray
    training: SimulationScenario
    validation: SimulationScenario | None
    allow_dropout: bool = False
    training_convection: str = "cubic"
    xatol: float = 1e-4
    max_evals: int = 500
    fd_rel_step: float = 1e-3
    fd_abs_floor: float = 1e-6
    basis: PolyBasis = field(default_factory=PolyBasis)
    reg_prior_mean: np.ndarray | None = None
    reg_prior_cov: np.ndarray | None = None
    grid_points: int = 101
    baseline_order: int = 3
    baseline_q: float = 1e-12
    seed: int = 0

    @property
    def n_components(self) -> int:
        return self.model.n_components

    @property
    def C(self) -> np.ndarray:
        return temperature_selector(self.n_components, self.measured)

    @property
    def hash(self) -> str:
        return config_hash(self.raw)

    def model_config(self) -> ModelConfig:
        return ModelConfig(self.model, self.C, self.R, self.m0_temps, self.S0_temps)


def _scenario(block: dict, model: LumpedThermalModel, seed: int, where: str) -> SimulationScenario:
    pulses = []
    for i, p in enumerate(block.get("heat_input", [])):
        if p["component"] >= model.n_components:
            raise ConfigError(f"{where}.heat_input[{i}].component out of range")
        stop = p.get("stop")
        pulses.append(HeatPulse(p["component"], p["power"], p.get("start", 0.0), np.inf if stop is None else stop))
    try:
        return SimulationScenario(
            model=model, T0=block["T0"], ambient=block["ambient"], heat_input=pulses,
            dt=block["dt"], n_steps=block["n_steps"], noise_var=block.get("noise_var", 0.0), seed=seed,
        )
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def _square(value, n: int, where: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.shape != (n, n):
        raise ConfigError(f"{where} must be {n}x{n}, got shape {arr.shape}")
    if not np.allclose(arr, arr.T):
        raise ConfigError(f"{where} must be symmetric")
    try:
        np.linalg.cholesky(arr)
    except np.linalg.LinAlgError:
        raise ConfigError(f"{where} must be positive definite") from None
    return arr


def parse_config(raw: dict) -> RunConfig:
    try:
        jsonschema.validate(raw, load_schema())
    except jsonschema.ValidationError as exc:
        path = ".".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config field {path}: {exc.message}") from None

    m = raw["model"]
    K = chain_conductance(m["couplings"]) if "couplings" in m else m["conductance"]
    try:
        model = LumpedThermalModel(m["heat_capacity"], K, m["h_ambient"], m["surface_area"])
    except ValueError as exc:
        raise ConfigError(f"model: {exc}") from None
    D = model.n_components

    kern = raw["kernel"]
    priors = (GammaPrior(**kern["priors"]["gamma"]), GammaPrior(**kern["priors"]["length"]))
    init = KernelHyperparams(kern["init"]["gamma"], kern["init"]["length"])
    opt = kern.get("optimizer", {})

    sp = raw["state_prior"]
    m0 = np.asarray(sp["mean"], dtype=float)
    if m0.shape != (D,):
        raise ConfigError(f"state_prior.mean must have length {D}")
    S0 = _square(sp["cov"], D, "state_prior.cov")

    meas = raw["measurement"]
    measured = list(meas.get("measured", range(D)))
    if any(i >= D for i in measured) or len(set(measured)) != len(measured):
        raise ConfigError("measurement.measured has out-of-range or repeated indices")
    p = len(measured)
    R = _square(meas["noise_cov"], p, "measurement.noise_cov") if "noise_cov" in meas else meas["noise_var"] * np.eye(p)

    reg = raw.get("regression", {})
    basis = PolyBasis(reg.get("order", 3))
    mu0 = np.asarray(reg.get("prior_mean", np.zeros(basis.order)), dtype=float)
    if mu0.shape != (basis.order,):
        raise ConfigError(f"regression.prior_mean must have length {basis.order}")
    if "prior_cov" in reg:
        Sig0 = _square(reg["prior_cov"], basis.order, "regression.prior_cov")
    else:
        Sig0 = reg.get("prior_cov_scale", 1e3) * np.eye(basis.order)

    seed = raw.get("seed", 0)
    sc = raw["scenarios"]
    training = _scenario(sc["training"], model, seed, "scenarios.training")
    validation = _scenario(sc["validation"], model, seed, "scenarios.validation") if "validation" in sc else None
    bl = raw.get("baseline", {})

    return RunConfig(
        raw=raw, model=model, priors=priors, init_psi=init, measured=measured, R=R,
        m0_temps=m0, S0_temps=S0, training=training, validation=validation,
        allow_dropout=meas.get("allow_dropout", False),
        training_convection=sc["training"].get("convection", "cubic"),
        xatol=opt.get("xatol", 1e-4), max_evals=opt.get("max_evals", 500),
        fd_rel_step=opt.get("fd_rel_step", 1e-3), fd_abs_floor=opt.get("fd_abs_floor", 1e-6),
        basis=basis, reg_prior_mean=mu0, reg_prior_cov=Sig0, grid_points=reg.get("grid_points", 101),
        baseline_order=bl.get("order", 3), baseline_q=bl.get("q", 1e-12), seed=seed,
    )


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    return parse_config(raw)
