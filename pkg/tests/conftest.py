import numpy as np
import pytest

from heatid.discretize import temperature_selector
from heatid.gp_sde import KernelHyperparams
from heatid.hyperlaplace import GammaPrior, ModelConfig
from heatid.simulator import HeatPulse, SimulationScenario, simulate, synthesize_measurements, true_convection
from heatid.thermal_model import LumpedThermalModel

ACCEPTANCE_LINES = []


@pytest.fixture
def report():
    """Record one acceptance line; printed in the terminal summary."""

    def _report(name, passed, detail=""):
        ACCEPTANCE_LINES.append(f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}")

    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def rod_model():
    return LumpedThermalModel.chain([1000.0] * 3, [10.0, 10.0], 2.0, [1.0, 1.0, 1.0])


@pytest.fixture(scope="session")
def training_scenario(rod_model):
    return SimulationScenario(rod_model, 21.0, 21.0, [HeatPulse(0, 100.0, 100.0)], 1.0, 1000, 1e-3, 0)


@pytest.fixture(scope="session")
def validation_scenario(rod_model):
    return SimulationScenario(rod_model, 25.0, 21.0, [HeatPulse(0, 100.0, 120.0, 600.0)], 1.0, 1000)


@pytest.fixture(scope="session")
def training_truth(training_scenario):
    return simulate(training_scenario, true_convection)


@pytest.fixture(scope="session")
def training_data(training_scenario, training_truth):
    return synthesize_measurements(training_scenario, training_truth)


@pytest.fixture(scope="session")
def model_config(rod_model):
    return ModelConfig(rod_model, temperature_selector(3), 1e-3 * np.eye(3), np.full(3, 21.0), np.eye(3))


@pytest.fixture(scope="session")
def priors():
    return GammaPrior(5.0, 0.1), GammaPrior(5.0, 0.1)


@pytest.fixture(scope="session")
def psi_ref():
    # close to the MAP on the simulated rod data
    return KernelHyperparams(3.9, 510.0)
