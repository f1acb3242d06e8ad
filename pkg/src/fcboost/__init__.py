"""Adaptive PI passivity-based voltage regulation of a fuel-cell boost converter.

Subpackages by concern: `pemfc` (static cell curve and its inverse),
`plant` (averaged converter dynamics), `equilibrium` (assignable steady
states), `controller` (PI law on the passive output), `estimator` (online
loss-parameter estimation), `sim` (closed-loop scenarios), `cli` (front
end).
"""

from .controller import PiGains, SaturationLimits
from .equilibrium import Equilibrium, InfeasibleSetpointError, solve_equilibrium
from .estimator import EstimatorGains
from .pemfc import PolarizationParams, vfc, d1
from .plant import PlantParams, PlantState
from .sim import Scenario, SimTrace, run_scenario, scenario1, scenario2, scenario3

__version__ = "0.1.0"

__all__ = [
    "PiGains",
    "SaturationLimits",
    "Equilibrium",
    "InfeasibleSetpointError",
    "solve_equilibrium",
    "EstimatorGains",
    "PolarizationParams",
    "vfc",
    "d1",
    "PlantParams",
    "PlantState",
    "Scenario",
    "SimTrace",
    "run_scenario",
    "scenario1",
    "scenario2",
    "scenario3",
    "__version__",
]
