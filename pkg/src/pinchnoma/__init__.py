"""Energy-efficiency optimization for wirelessly powered pinching-antenna NOMA uplinks."""
from .config import (AgentConfig, BatteryParams, ConfigError, EhParams, ExperimentConfig, RunConfig, SystemConfig,
                     UncertaintyParams, load_config)
from .env import PinchingEnv

__version__ = "0.1.0"

__all__ = [
    "AgentConfig",
    "BatteryParams",
    "ConfigError",
    "EhParams",
    "ExperimentConfig",
    "PinchingEnv",
    "RunConfig",
    "SystemConfig",
    "UncertaintyParams",
    "load_config",
]
