"""Two-body heaving wave-energy converter with a hydraulic power take-off:
deterministic time-domain simulation plus a suite of design optimizers."""

__version__ = "0.1.0"

from .dynamics import BodyHydro, BodyState, SimConfig
from .hpto import DESIGN_BOUNDS, DesignVector, HptoFixedParams, HptoState
from .metrics import Metrics, compute_metrics
from .simulate import Scenario, SimulationResult, build_scenario, simulate_design
from .wave import SpectrumSpec, WaveRealization, pm_density, realize

__all__ = [
    "BodyHydro",
    "BodyState",
    "DESIGN_BOUNDS",
    "DesignVector",
    "HptoFixedParams",
    "HptoState",
    "Metrics",
    "Scenario",
    "SimConfig",
    "SimulationResult",
    "SpectrumSpec",
    "WaveRealization",
    "build_scenario",
    "compute_metrics",
    "pm_density",
    "realize",
    "simulate_design",
]
