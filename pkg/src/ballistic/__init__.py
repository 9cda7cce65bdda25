"""Ballistic diffusion of Gaussian slit densities, multi-slit current rules,
averaged trajectories, and the bouncer-walker energy balance."""

from .kernels import BACKEND
from .physics import GridSpec, ParameterError, PhaseSchedule, PhysicalParams, SlitSpec
from .fdm import NumericalError, Scheme, evolve_slit
from .currents import Coherence, build_channels, combine
from .config import ConfigError, ScenarioConfig, parse_config, serialize_config
from .experiments import run_scenario

__all__ = [
    "BACKEND", "Coherence", "ConfigError", "GridSpec", "NumericalError", "ParameterError",
    "PhaseSchedule", "PhysicalParams", "ScenarioConfig", "Scheme", "SlitSpec", "build_channels",
    "combine", "evolve_slit", "parse_config", "run_scenario", "serialize_config",
]
__version__ = "0.1.0"
