"""Time-slotted LEO satellite network simulator with bandit-based distributed routing."""
from .config import ConfigError, FailureSchedule, RouterSpec, SimConfig, desk_preset, load_config
from .harness import Scenario, apply_failures, compare_routers, make_router, run_simulation, sweep_tiles

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "FailureSchedule", "RouterSpec", "SimConfig", "Scenario", "apply_failures",
    "compare_routers", "desk_preset", "load_config", "make_router", "run_simulation", "sweep_tiles",
]
