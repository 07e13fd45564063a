"""Configuration records and JSON ingestion.

All physical quantities are SI (W, J, m, s, Hz). dBm values are converted to
watts exactly once, here, when a document is loaded.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0


class ConfigError(ValueError):
    """Raised for invalid or inconsistent configuration values."""


def dbm_to_w(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def _per_user(value, num_users: int, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        return np.full(num_users, float(arr))
    if arr.shape != (num_users,):
        raise ConfigError(f"{name}: expected a scalar or an array of length {num_users}, got shape {arr.shape}")
    return arr.copy()


@dataclass(frozen=True)
class EhParams:
    """Nonlinear (sigmoid) rectifier parameters.

    Any field may be a per-user sequence of length K instead of a scalar.
    """

    sensitivity_a: float | tuple = 150.0
    threshold_b: float | tuple = 0.0014
    saturation_iota: float | tuple = 0.024

    def validate(self, num_users: int) -> None:
        a = _per_user(self.sensitivity_a, num_users, "eh.sensitivity_a")
        b = _per_user(self.threshold_b, num_users, "eh.threshold_b")
        iota = _per_user(self.saturation_iota, num_users, "eh.saturation_iota")
        if np.any(a <= 0):
            raise ConfigError("eh.sensitivity_a must be > 0")
        if np.any(b < 0):
            raise ConfigError("eh.threshold_b must be >= 0")
        if np.any(iota <= 0):
            raise ConfigError("eh.saturation_iota must be > 0")

    def arrays(self, num_users: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return (
            _per_user(self.sensitivity_a, num_users, "eh.sensitivity_a"),
            _per_user(self.threshold_b, num_users, "eh.threshold_b"),
            _per_user(self.saturation_iota, num_users, "eh.saturation_iota"),
        )


@dataclass(frozen=True)
class BatteryParams:
    capacity_j: float | tuple = 0.1
    storage_efficiency: float | tuple = 0.9
    fixed_circuit_energy_j: float | tuple = 1e-5

    def validate(self, num_users: int) -> None:
        cap = _per_user(self.capacity_j, num_users, "battery.capacity_j")
        eta = _per_user(self.storage_efficiency, num_users, "battery.storage_efficiency")
        ef = _per_user(self.fixed_circuit_energy_j, num_users, "battery.fixed_circuit_energy_j")
        if np.any(cap <= 0):
            raise ConfigError("battery.capacity_j must be > 0")
        if np.any((eta <= 0) | (eta > 1)):
            raise ConfigError("battery.storage_efficiency must lie in (0, 1]")
        if np.any(ef < 0):
            raise ConfigError("battery.fixed_circuit_energy_j must be >= 0")

    def arrays(self, num_users: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return (
            _per_user(self.capacity_j, num_users, "battery.capacity_j"),
            _per_user(self.storage_efficiency, num_users, "battery.storage_efficiency"),
            _per_user(self.fixed_circuit_energy_j, num_users, "battery.fixed_circuit_energy_j"),
        )


@dataclass(frozen=True)
class UncertaintyParams:
    battery_bound_j: float = 0.005
    location_bound_m: float = 1.0
    location_sigma_m: float = 0.5

    def validate(self) -> None:
        for f in dataclasses.fields(self):
            if getattr(self, f.name) < 0:
                raise ConfigError(f"uncertainty.{f.name} must be >= 0")

    @classmethod
    def off(cls) -> "UncertaintyParams":
        return cls(0.0, 0.0, 0.0)


@dataclass(frozen=True)
class SystemConfig:
    """Physical, energy, uncertainty and economic parameters of one network.

    ``min_spacing_m`` defaults to half a free-space wavelength and
    ``waveguide_length_m`` to ``region_x_m`` when left as ``None``.
    """

    carrier_frequency_hz: float = 28e9
    pa_height_m: float = 3.0
    region_x_m: float = 60.0
    region_y_m: float = 20.0
    num_users: int = 3
    num_pas: int = 3
    feed_position_m: float = 0.0
    effective_refractive_index: float = 1.4
    coupling_delta: float = math.sin(math.pi / 4)
    attenuation_db_per_m: float = 0.5
    min_spacing_m: float | None = None
    noise_power_w: float = 1e-12
    bs_wpt_power_w: float = 1.0
    slot_duration_s: float = 1.0
    fixed_circuit_power_w: float = 0.1
    min_rate_bpshz: float = 0.1
    waveguide_length_m: float | None = None
    max_tx_power_w: float = 0.1
    episode_slots: int = 20
    penalty_reward: float = -1.0
    eh: EhParams = field(default_factory=EhParams)
    battery: BatteryParams = field(default_factory=BatteryParams)
    uncertainty: UncertaintyParams = field(default_factory=UncertaintyParams)

    def __post_init__(self):
        if self.carrier_frequency_hz <= 0:
            raise ConfigError("carrier_frequency_hz must be > 0")
        if self.effective_refractive_index <= 0:
            raise ConfigError("effective_refractive_index must be > 0")
        if self.min_spacing_m is None:
            lam = SPEED_OF_LIGHT / self.carrier_frequency_hz
            object.__setattr__(self, "min_spacing_m", lam / 2.0)
        if self.waveguide_length_m is None:
            object.__setattr__(self, "waveguide_length_m", float(self.region_x_m))
        self.validate()

    def validate(self) -> None:
        if self.region_x_m <= 0 or self.region_y_m <= 0:
            raise ConfigError("region dimensions must be > 0")
        if int(self.num_users) != self.num_users or self.num_users < 1:
            raise ConfigError("num_users must be an integer >= 1")
        if int(self.num_pas) != self.num_pas or self.num_pas < 1:
            raise ConfigError("num_pas must be an integer >= 1")
        if not 0.0 < self.coupling_delta <= 1.0:
            raise ConfigError("coupling_delta must lie in (0, 1]")
        if self.attenuation_db_per_m < 0:
            raise ConfigError("attenuation_db_per_m must be >= 0")
        if self.min_spacing_m < 0:
            raise ConfigError("min_spacing_m must be >= 0")
        if self.waveguide_length_m <= 0:
            raise ConfigError("waveguide_length_m must be > 0")
        if self.num_pas * self.min_spacing_m > self.waveguide_length_m:
            raise ConfigError(
                f"num_pas * min_spacing_m = {self.num_pas * self.min_spacing_m:g} exceeds "
                f"waveguide_length_m = {self.waveguide_length_m:g}"
            )
        if not 0.0 <= self.feed_position_m <= self.waveguide_length_m:
            raise ConfigError("feed_position_m must lie in [0, waveguide_length_m]")
        if self.noise_power_w <= 0:
            raise ConfigError("noise_power_w must be > 0")
        if self.bs_wpt_power_w < 0:
            raise ConfigError("bs_wpt_power_w must be >= 0")
        if self.slot_duration_s <= 0:
            raise ConfigError("slot_duration_s must be > 0")
        if self.fixed_circuit_power_w <= 0:
            raise ConfigError("fixed_circuit_power_w must be > 0")
        if self.min_rate_bpshz < 0:
            raise ConfigError("min_rate_bpshz must be >= 0")
        if self.max_tx_power_w <= 0:
            raise ConfigError("max_tx_power_w must be > 0")
        if int(self.episode_slots) != self.episode_slots or self.episode_slots < 1:
            raise ConfigError("episode_slots must be an integer >= 1")
        self.eh.validate(self.num_users)
        self.battery.validate(self.num_users)
        self.uncertainty.validate()

    @property
    def wavelength_m(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_frequency_hz

    @property
    def guided_wavelength_m(self) -> float:
        return self.wavelength_m / self.effective_refractive_index

    @property
    def action_dim(self) -> int:
        return self.num_users + self.num_pas + 1

    @property
    def obs_dim(self) -> int:
        return 3 * self.num_users

    def replace(self, **changes) -> "SystemConfig":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class AgentConfig:
    discount: float = 0.9
    tau: float = 0.001
    learning_rate: float = 5e-4
    batch_size: int = 64
    buffer_size: int = 10_000
    hidden_sizes: tuple = (256, 256)
    noise_start: float = 0.2
    noise_end: float = 0.01
    target_noise_std: float = 0.0
    updates_per_episode: int | None = None  # None -> episode length

    def __post_init__(self):
        object.__setattr__(self, "hidden_sizes", tuple(int(h) for h in self.hidden_sizes))
        if not 0.0 <= self.discount < 1.0:
            raise ConfigError("agent.discount must lie in [0, 1)")
        if not 0.0 <= self.tau <= 1.0:
            raise ConfigError("agent.tau must lie in [0, 1]")
        if self.learning_rate <= 0:
            raise ConfigError("agent.learning_rate must be > 0")
        if self.batch_size < 1 or self.buffer_size < 1:
            raise ConfigError("agent.batch_size and agent.buffer_size must be >= 1")
        if self.batch_size > self.buffer_size:
            raise ConfigError("agent.batch_size must not exceed agent.buffer_size")
        if not self.hidden_sizes or min(self.hidden_sizes) < 1:
            raise ConfigError("agent.hidden_sizes must be a non-empty list of positive widths")
        if self.noise_start < 0 or self.noise_end < 0 or self.target_noise_std < 0:
            raise ConfigError("agent noise levels must be >= 0")
        if self.updates_per_episode is not None and self.updates_per_episode < 0:
            raise ConfigError("agent.updates_per_episode must be >= 0")


@dataclass(frozen=True)
class RunConfig:
    seeds: tuple = (0, 1, 2, 3, 4)
    episodes: int = 2000
    eval_episodes: int = 5
    output_dir: str = "runs"
    experiment_id: str = "default"

    def __post_init__(self):
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if not self.seeds:
            raise ConfigError("run.seeds must be non-empty")
        if any(s < 0 for s in self.seeds):
            raise ConfigError("run.seeds must be non-negative integers")
        if self.episodes < 1 or self.eval_episodes < 1:
            raise ConfigError("run.episodes and run.eval_episodes must be >= 1")


@dataclass(frozen=True)
class ExperimentConfig:
    system: SystemConfig = field(default_factory=SystemConfig)
    agent: AgentConfig = field(default_factory=AgentConfig)
    run: RunConfig = field(default_factory=RunConfig)

    def to_dict(self) -> dict:
        return experiment_to_dict(self)

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()


# ---------------------------------------------------------------- JSON I/O

_NESTED = {"eh": EhParams, "battery": BatteryParams, "uncertainty": UncertaintyParams}


def _build(cls, data: dict, prefix: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{prefix or 'config'}: expected an object")
    names = {f.name for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in data.items():
        if key not in names:
            raise ConfigError(f"unknown config key: {prefix}{key}")
        if isinstance(value, list):
            value = tuple(value)
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"{prefix or 'config'}: {exc}") from exc


def system_from_dict(data: dict) -> SystemConfig:
    data = dict(data)
    nested = {}
    for key, cls in _NESTED.items():
        if key in data:
            nested[key] = _build(cls, data.pop(key), f"{key}.")
    if "noise_power_dbm" in data:
        if "noise_power_w" in data:
            raise ConfigError("give only one of noise_power_dbm / noise_power_w")
        data["noise_power_w"] = dbm_to_w(float(data.pop("noise_power_dbm")))
    names = {f.name for f in dataclasses.fields(SystemConfig)}
    for key in data:
        if key not in names:
            raise ConfigError(f"unknown config key: {key}")
    return SystemConfig(**data, **nested)


def experiment_from_dict(data: dict) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("config document must be a JSON object")
    data = dict(data)
    agent = _build(AgentConfig, data.pop("agent", {}), "agent.")
    run = _build(RunConfig, data.pop("run", {}), "run.")
    return ExperimentConfig(system=system_from_dict(data), agent=agent, run=run)


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return experiment_from_dict(data)


def _plain(value: Any):
    if isinstance(value, (tuple, list)):
        return [_plain(v) for v in value]
    if isinstance(value, np.generic):
        return value.item()
    return value


def system_to_dict(cfg: SystemConfig) -> dict:
    out = {}
    for f in dataclasses.fields(cfg):
        value = getattr(cfg, f.name)
        if dataclasses.is_dataclass(value):
            out[f.name] = {g.name: _plain(getattr(value, g.name)) for g in dataclasses.fields(value)}
        else:
            out[f.name] = _plain(value)
    return out


def experiment_to_dict(cfg: ExperimentConfig) -> dict:
    out = system_to_dict(cfg.system)
    out["agent"] = {f.name: _plain(getattr(cfg.agent, f.name)) for f in dataclasses.fields(cfg.agent)}
    out["run"] = {f.name: _plain(getattr(cfg.run, f.name)) for f in dataclasses.fields(cfg.run)}
    return out


def parse_int_list(text: str | Sequence[int]) -> list[int]:
    if isinstance(text, str):
        try:
            return [int(tok) for tok in text.split(",") if tok.strip()]
        except ValueError as exc:
            raise ConfigError(f"expected a comma-separated integer list, got {text!r}") from exc
    return [int(v) for v in text]
