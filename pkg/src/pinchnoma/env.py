"""Episodic harvest-then-transmit environment.

The environment keeps the true battery levels and user positions and exposes
only noisy estimates to the agent. Physics (harvesting, energy causality,
rates) is always evaluated on the true quantities.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import energy
from .channel import channel_gains, project_layout
from .config import SystemConfig
from .rates import ee_value, noma_rates, oma_rates
from .rng import stream

ACCESS_MODES = ("noma", "oma")


@dataclass
class EnvState:
    slot_index: int
    true_batteries_j: np.ndarray
    est_batteries_j: np.ndarray
    true_positions: np.ndarray  # (K, 2) x, y
    est_positions: np.ndarray

    def copy(self) -> "EnvState":
        return EnvState(
            self.slot_index,
            self.true_batteries_j.copy(),
            self.est_batteries_j.copy(),
            self.true_positions.copy(),
            self.est_positions.copy(),
        )


@dataclass
class ActionVector:
    raw: np.ndarray
    powers_w: np.ndarray
    layout: np.ndarray
    beta: float
    requested_powers_w: np.ndarray = field(default=None)
    projected: bool = False


@dataclass
class SlotResult:
    powers_w: np.ndarray
    gains: np.ndarray
    harvested_j: np.ndarray
    consumed_j: np.ndarray
    rates_bpshz: np.ndarray
    ee: float
    rate_violation: bool


@dataclass
class StepOutcome:
    reward: float
    next_state: EnvState
    action: ActionVector
    rates_bpshz: np.ndarray
    harvested_j: np.ndarray
    consumed_j: np.ndarray
    ee: float
    rate_violation: bool
    power_clipped: bool
    terminal: bool

    @property
    def feasible_ee(self) -> float:
        """Slot EE counted toward the objective: zero when a rate floor is missed."""
        return 0.0 if self.rate_violation else self.ee


# ------------------------------------------------------------ uncertainty

def perturb_battery(true_j, bound: float, capacity_j, rng: np.random.Generator) -> np.ndarray:
    true_j = np.asarray(true_j, dtype=float)
    if bound == 0:
        return true_j.copy()
    err = rng.uniform(-bound, bound, size=true_j.shape)
    return np.clip(true_j + err, 0.0, capacity_j)


def perturb_location(true_xy, sigma: float, bound: float, cfg: SystemConfig, rng: np.random.Generator,
                     clip: bool = True) -> np.ndarray:
    """Add a zero-mean Gaussian error conditioned on ``||error|| <= bound``.

    Rejected draws are redrawn; the result is clipped to the service area
    unless ``clip`` is False.
    """
    true_xy = np.asarray(true_xy, dtype=float)
    if sigma == 0 or bound == 0:
        return true_xy.copy()
    pts = true_xy.reshape(-1, 2)
    err = rng.normal(0.0, sigma, size=pts.shape)
    bad = np.hypot(err[:, 0], err[:, 1]) > bound
    while np.any(bad):
        err[bad] = rng.normal(0.0, sigma, size=(int(bad.sum()), 2))
        bad = np.hypot(err[:, 0], err[:, 1]) > bound
    est = pts + err
    if clip:
        est[:, 0] = np.clip(est[:, 0], 0.0, cfg.region_x_m)
        est[:, 1] = np.clip(est[:, 1], -cfg.region_y_m / 2, cfg.region_y_m / 2)
    return est.reshape(true_xy.shape)


def _estimates(true_b, true_xy, cfg: SystemConfig, rng):
    unc = cfg.uncertainty
    cap, _, _ = cfg.battery.arrays(cfg.num_users)
    est_b = perturb_battery(true_b, unc.battery_bound_j, cap, rng)
    est_xy = perturb_location(true_xy, unc.location_sigma_m, unc.location_bound_m, cfg, rng)
    return est_b, est_xy


def reset_state(cfg: SystemConfig, rng: np.random.Generator) -> EnvState:
    k = cfg.num_users
    cap, _, _ = cfg.battery.arrays(k)
    true_b = rng.uniform(0.0, 1.0, size=k) * cap
    xs = rng.uniform(0.0, cfg.region_x_m, size=k)
    ys = rng.uniform(-cfg.region_y_m / 2, cfg.region_y_m / 2, size=k)
    true_xy = np.column_stack([xs, ys])
    est_b, est_xy = _estimates(true_b, true_xy, cfg, rng)
    return EnvState(0, true_b, est_b, true_xy, est_xy)


def observation(state: EnvState, cfg: SystemConfig) -> np.ndarray:
    cap, _, _ = cfg.battery.arrays(cfg.num_users)
    xy = state.est_positions / np.array([cfg.region_x_m, cfg.region_y_m])
    return np.concatenate([state.est_batteries_j / cap, xy.ravel()])


# ------------------------------------------------------------ slot physics

def evaluate_slot(cfg: SystemConfig, positions_xy, batteries_j, requested_powers_w, layout, beta: float,
                  access: str = "noma") -> SlotResult:
    """One slot of harvest-then-transmit on the given (true or assumed) state.

    Requested powers are clipped to what the battery plus this slot's harvest
    can pay for, so energy causality always holds.
    """
    k = cfg.num_users
    cap_j, eta, e_fixed = cfg.battery.arrays(k)
    a, b, iota = cfg.eh.arrays(k)
    share = 1.0 / k if access == "oma" else 1.0
    ts = cfg.slot_duration_s

    gains = channel_gains(positions_xy, layout, cfg)
    rx_power = cfg.bs_wpt_power_w * np.abs(gains) ** 2
    harvested = energy.harvested_energy(beta, ts, rx_power, a, b, iota)
    if beta >= 1.0:
        powers = np.zeros(k)
    else:
        p_cap = energy.feasible_power_cap(batteries_j, eta, harvested, beta, ts, e_fixed, cfg.max_tx_power_w, share)
        powers = np.minimum(np.asarray(requested_powers_w, dtype=float), p_cap)
    consumed = energy.consumed_energy(beta, ts, powers, e_fixed, share)
    # a user that cannot cover its circuit energy browns out: draw is limited to what it has
    consumed = np.minimum(consumed, batteries_j + eta * harvested)

    if access == "oma":
        report = oma_rates(powers, gains, cfg.noise_power_w, beta, k)
    else:
        report = noma_rates(powers, gains, cfg.noise_power_w, beta)
    rates = report.per_user_rate_bpshz
    ee = ee_value(report, powers, cfg.fixed_circuit_power_w)
    return SlotResult(powers, gains, harvested, consumed, rates, ee, bool(np.any(rates < cfg.min_rate_bpshz)))


def reward_from(result: SlotResult, cfg: SystemConfig) -> float:
    return cfg.penalty_reward if result.rate_violation else result.ee


def decode_action(raw, state: EnvState, cfg: SystemConfig, layout=None, access: str = "noma") -> ActionVector:
    """Map a raw actor output in [-1, 1]^(K+N+1) onto the feasible set.

    Layout: ``[powers (K), PA positions (N), beta]``. Passing ``layout``
    overrides the position part (used by placement benchmarks).
    """
    k, n = cfg.num_users, cfg.num_pas
    raw = np.clip(np.asarray(raw, dtype=float).ravel(), -1.0, 1.0)
    if raw.shape != (k + n + 1,):
        raise ValueError(f"raw action must have {k + n + 1} entries, got {raw.shape[0]}")
    beta = float((raw[-1] + 1.0) / 2.0)
    if layout is None:
        asked = (raw[k:k + n] + 1.0) / 2.0 * cfg.waveguide_length_m
        x = project_layout(asked, cfg)
        moved = not np.allclose(np.sort(asked), x, rtol=0, atol=1e-12)
    else:
        x = np.asarray(layout, dtype=float)
        moved = False
    requested = (raw[:k] + 1.0) / 2.0 * cfg.max_tx_power_w
    slot = evaluate_slot(cfg, state.true_positions, state.true_batteries_j, requested, x, beta, access)
    clipped = bool(np.any(slot.powers_w < requested))
    return ActionVector(raw, slot.powers_w, x, beta, requested, moved or clipped)


def encode_action(powers_w, layout, beta: float, cfg: SystemConfig) -> np.ndarray:
    """Inverse of the affine part of :func:`decode_action`."""
    p = 2.0 * np.asarray(powers_w, dtype=float) / cfg.max_tx_power_w - 1.0
    x = 2.0 * np.asarray(layout, dtype=float) / cfg.waveguide_length_m - 1.0
    return np.clip(np.concatenate([p, x, [2.0 * beta - 1.0]]), -1.0, 1.0)


def step(state: EnvState, action: ActionVector, cfg: SystemConfig, rng: np.random.Generator,
         access: str = "noma") -> StepOutcome:
    if state.slot_index >= cfg.episode_slots:
        raise RuntimeError("episode already terminated; call reset()")
    slot = evaluate_slot(cfg, state.true_positions, state.true_batteries_j, action.powers_w, action.layout,
                         action.beta, access)
    reward = reward_from(slot, cfg)
    requested = action.powers_w if action.requested_powers_w is None else action.requested_powers_w
    cap_j, eta, _ = cfg.battery.arrays(cfg.num_users)
    batteries = energy.battery_update(state.true_batteries_j, eta, slot.harvested_j, slot.consumed_j, cap_j)
    est_b, est_xy = _estimates(batteries, state.true_positions, cfg, rng)
    nxt = EnvState(state.slot_index + 1, batteries, est_b, state.true_positions.copy(), est_xy)
    return StepOutcome(
        reward=reward,
        next_state=nxt,
        action=action,
        rates_bpshz=slot.rates_bpshz,
        harvested_j=slot.harvested_j,
        consumed_j=slot.consumed_j,
        ee=slot.ee,
        rate_violation=slot.rate_violation,
        power_clipped=bool(np.any(slot.powers_w < requested)),
        terminal=nxt.slot_index >= cfg.episode_slots,
    )


class PinchingEnv:
    """Stateful wrapper owning one episode and its random stream."""

    def __init__(self, cfg: SystemConfig, access: str = "noma"):
        if access not in ACCESS_MODES:
            raise ValueError(f"access must be one of {ACCESS_MODES}")
        self.cfg = cfg
        self.access = access
        self.state: EnvState | None = None
        self.rng: np.random.Generator | None = None

    @property
    def obs_dim(self) -> int:
        return self.cfg.obs_dim

    @property
    def action_dim(self) -> int:
        return self.cfg.action_dim

    def reset(self, seed: int, *path) -> np.ndarray:
        self.rng = stream(seed, "env", *path)
        self.state = reset_state(self.cfg, self.rng)
        return observation(self.state, self.cfg)

    def observe(self) -> np.ndarray:
        return observation(self.state, self.cfg)

    def decode(self, raw, layout=None) -> ActionVector:
        return decode_action(raw, self.state, self.cfg, layout=layout, access=self.access)

    def step(self, raw, layout=None) -> tuple[np.ndarray, float, bool, StepOutcome]:
        if self.state is None:
            raise RuntimeError("call reset() before step()")
        action = self.decode(raw, layout)
        out = step(self.state, action, self.cfg, self.rng, self.access)
        self.state = out.next_state
        return observation(self.state, self.cfg), out.reward, out.terminal, out


def trace_header(cfg: SystemConfig) -> list[str]:
    k, n = cfg.num_users, cfg.num_pas
    return (["t", "beta"] + [f"p{i + 1}" for i in range(k)] + [f"x{i + 1}" for i in range(n)]
            + [f"rate{i + 1}" for i in range(k)] + ["reward"] + [f"battery{i + 1}" for i in range(k)])


def trace_row(t: int, out: StepOutcome) -> list:
    a = out.action
    return ([t, a.beta] + list(a.powers_w) + list(a.layout) + list(out.rates_bpshz) + [out.reward]
            + list(out.next_state.true_batteries_j))


def write_trace(path, cfg: SystemConfig, outcomes: list[StepOutcome]) -> None:
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(trace_header(cfg))
        for t, out in enumerate(outcomes):
            w.writerow([repr(float(v)) if not isinstance(v, int) else v for v in trace_row(t, out)])
