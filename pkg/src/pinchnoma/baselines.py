"""Benchmark placement policies, a brute-force single-slot oracle, and evaluation.

Placement benchmarks borrow power and time-switching decisions from a DRL
actor and only replace the PA layout. The oracle enumerates a Cartesian grid
over (layout, beta, powers) and keeps the best point satisfying all slot
constraints.
"""
from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import energy
from .channel import channel_gains, is_feasible_layout
from .config import ConfigError, SystemConfig
from .env import EnvState, PinchingEnv
from .rates import noma_sum_rates_batch

POLICY_KINDS = ("drl", "fixed", "discrete", "continuous_constrained", "oma_drl")
MAX_GRID_POINTS = 10_000_000


# ------------------------------------------------------------ layouts

def fixed_layout_policy(cfg: SystemConfig) -> np.ndarray:
    """PAs at the centres of N equal waveguide segments."""
    n, length = cfg.num_pas, cfg.waveguide_length_m
    if cfg.min_spacing_m > length / n:
        raise ConfigError("min_spacing_m exceeds the uniform segment length")
    return (np.arange(1, n + 1) - 0.5) * length / n


def position_grid(cfg: SystemConfig, grid_points: int) -> np.ndarray:
    """``grid_points`` cell-centre positions along the waveguide."""
    if grid_points < 1:
        raise ConfigError("grid_points must be >= 1")
    return (np.arange(1, grid_points + 1) - 0.5) * cfg.waveguide_length_m / grid_points


def default_grid_points(num_pas: int, minimum: int = 8) -> int:
    """Smallest ``N * m`` with ``m`` odd and at least ``minimum`` points.

    Such grids contain the fixed uniform layout.
    """
    m = 1
    while num_pas * m < minimum:
        m += 2
    return num_pas * m


def grid_layouts(cfg: SystemConfig, grid_points: int) -> np.ndarray:
    """All increasing N-subsets of the grid meeting the spacing rule, lexicographic."""
    grid = position_grid(cfg, grid_points)
    combos = [c for c in itertools.combinations(grid, cfg.num_pas) if is_feasible_layout(c, cfg)]
    if not combos:
        raise ConfigError(f"no feasible {cfg.num_pas}-PA layout on a {grid_points}-point grid")
    return np.array(combos)


def equal_spacing_layouts(cfg: SystemConfig, offset_steps: int) -> np.ndarray:
    if offset_steps < 1:
        raise ConfigError("offset_steps must be >= 1")
    n, length = cfg.num_pas, cfg.waveguide_length_m
    spacing = max(cfg.min_spacing_m, length / n)
    span = length - (n - 1) * spacing
    if span < 0:
        raise ConfigError("equal spacing does not fit on the waveguide")
    offsets = np.linspace(0.0, span, offset_steps) if offset_steps > 1 else np.array([0.0])
    return offsets[:, None] + spacing * np.arange(n)[None, :]


# ------------------------------------------------------------ grid evaluation

@dataclass
class GridEval:
    ee: np.ndarray  # (L, B, P)
    feasible: np.ndarray  # (L, B, P) all slot constraints hold
    powers: np.ndarray  # (L, B, P, K) powers actually used

    @property
    def score(self) -> np.ndarray:
        return np.where(self.feasible, self.ee, -np.inf)


def evaluate_grid(cfg: SystemConfig, positions_xy, batteries_j, layouts, betas, powers,
                  access: str = "noma", power_mode: str = "discard") -> GridEval:
    """Single-slot EE for every (layout, beta, power vector) combination.

    ``power_mode="discard"`` marks powers above the energy-causality cap as
    infeasible; ``"clip"`` lowers them to the cap like the environment does.
    """
    k = cfg.num_users
    layouts = np.atleast_2d(np.asarray(layouts, dtype=float))
    betas = np.atleast_1d(np.asarray(betas, dtype=float))
    powers = np.atleast_2d(np.asarray(powers, dtype=float))
    _, eta, e_fixed = cfg.battery.arrays(k)
    a, b, iota = cfg.eh.arrays(k)
    share = 1.0 / k if access == "oma" else 1.0
    ts = cfg.slot_duration_s

    g2 = np.abs(channel_gains(positions_xy, layouts, cfg)) ** 2  # (L, K)
    harvested = energy.harvested_energy(betas[None, :, None], ts, cfg.bs_wpt_power_w * g2[:, None, :], a, b, iota)
    cap = energy.feasible_power_cap(batteries_j, eta, harvested, betas[None, :, None], ts, e_fixed,
                                    cfg.max_tx_power_w, share)  # (L, B, K)
    p = np.broadcast_to(powers[None, None, :, :], (len(layouts), len(betas)) + powers.shape)
    if power_mode == "clip":
        used = np.minimum(p, cap[:, :, None, :])
        energy_ok = np.ones(p.shape[:3], dtype=bool)
    elif power_mode == "discard":
        used = p
        energy_ok = np.all(p <= cap[:, :, None, :], axis=-1)
    else:
        raise ValueError(f"unknown power_mode {power_mode!r}")
    # no uplink phase when beta == 1
    used = np.where((betas >= 1.0)[None, :, None, None], 0.0, used)

    snr = used * (g2 / cfg.noise_power_w)[:, None, None, :]
    if access == "oma":
        rates = ((1.0 - betas) / k)[None, :, None, None] * np.log2(1.0 + snr)
    else:
        order = np.argsort(-g2, axis=-1, kind="stable")[:, None, None, :]
        snr_sorted = np.take_along_axis(snr, np.broadcast_to(order, snr.shape), axis=-1)
        beta_b = np.broadcast_to(betas[None, :, None], snr.shape[:3])
        rates = noma_sum_rates_batch(snr_sorted, beta_b)
    ee = np.sum(rates, axis=-1) / (cfg.fixed_circuit_power_w + np.sum(used, axis=-1))
    rate_ok = np.all(rates >= cfg.min_rate_bpshz, axis=-1)
    return GridEval(ee, energy_ok & rate_ok, used)


def _first_argmax(score: np.ndarray) -> tuple:
    return np.unravel_index(int(np.argmax(score)), score.shape)


def _view(state: EnvState, use_estimates: bool):
    if use_estimates:
        return state.est_positions, state.est_batteries_j
    return state.true_positions, state.true_batteries_j


def _best_layout(cfg, state, layouts, powers_w, beta, access, use_estimates):
    pos, bat = _view(state, use_estimates)
    ev = evaluate_grid(cfg, pos, bat, layouts, [beta], [powers_w], access, power_mode="clip")
    idx = _first_argmax(ev.score[:, 0, 0])
    return layouts[idx[0]]


def discrete_position_search(state: EnvState, cfg: SystemConfig, grid_points: int, powers_w, beta: float,
                             access: str = "noma", use_estimates: bool = True) -> np.ndarray:
    """Best layout on a uniform grid for given powers and beta (lexicographic tie-break)."""
    if grid_points < cfg.num_pas:
        raise ConfigError("grid_points must be >= num_pas")
    return _best_layout(cfg, state, grid_layouts(cfg, grid_points), powers_w, beta, access, use_estimates)


def equal_spacing_offset_search(state: EnvState, cfg: SystemConfig, offset_steps: int, powers_w, beta: float,
                                access: str = "noma", use_estimates: bool = True) -> np.ndarray:
    """Best common offset for an equally spaced layout."""
    return _best_layout(cfg, state, equal_spacing_layouts(cfg, offset_steps), powers_w, beta, access,
                        use_estimates)


# ------------------------------------------------------------ oracle

@dataclass
class OracleResult:
    best_ee: float
    best_powers: np.ndarray
    best_layout: np.ndarray
    best_beta: float
    grid_sizes: dict
    evaluations: int
    feasible_points: int

    @property
    def feasible(self) -> bool:
        return np.isfinite(self.best_ee)


def oracle_grids(cfg: SystemConfig, beta_points=11, power_points=11, position_points=8):
    betas = np.linspace(0.0, 1.0, beta_points) if beta_points > 1 else np.array([0.0])
    levels = np.linspace(0.0, cfg.max_tx_power_w, power_points) if power_points > 1 else np.array([cfg.max_tx_power_w])
    powers = np.array(list(itertools.product(levels, repeat=cfg.num_users)))
    return betas, powers, grid_layouts(cfg, position_points)


def brute_force_oracle(state: EnvState, cfg: SystemConfig, beta_points: int = 11, power_points: int = 11,
                       position_points: int = 8, access: str = "noma", betas=None, powers=None,
                       layouts=None) -> OracleResult:
    """Exhaustive single-slot EE maximizer on the true state.

    Scan order is layout-major, then beta, then power vectors (user 1 most
    significant); the first maximizer in that order wins ties. Explicit
    ``betas``/``powers``/``layouts`` arrays override the uniform grids.
    """
    size = beta_points * power_points**cfg.num_users * position_points**cfg.num_pas
    if size > MAX_GRID_POINTS:
        raise RuntimeError(f"oracle grid of {size} points exceeds the {MAX_GRID_POINTS} guard")
    g_betas, g_powers, g_layouts = oracle_grids(cfg, beta_points, power_points, position_points)
    betas = g_betas if betas is None else np.atleast_1d(np.asarray(betas, dtype=float))
    powers = g_powers if powers is None else np.atleast_2d(np.asarray(powers, dtype=float))
    layouts = g_layouts if layouts is None else np.atleast_2d(np.asarray(layouts, dtype=float))
    total = len(layouts) * len(betas) * len(powers)
    if total > MAX_GRID_POINTS:
        raise RuntimeError(f"oracle grid of {total} points exceeds the {MAX_GRID_POINTS} guard")

    best = (-np.inf, None)
    feasible_points = 0
    # chunk over layouts to bound memory
    chunk = max(1, 2_000_000 // max(1, len(betas) * len(powers) * cfg.num_users))
    for start in range(0, len(layouts), chunk):
        ev = evaluate_grid(cfg, state.true_positions, state.true_batteries_j, layouts[start:start + chunk],
                           betas, powers, access, power_mode="discard")
        score = ev.score
        feasible_points += int(np.sum(ev.feasible))
        idx = _first_argmax(score)
        if score[idx] > best[0] or best[1] is None:
            best = (float(score[idx]), (idx[0] + start, idx[1], idx[2]))
    li, bi, pi = best[1]
    return OracleResult(
        best_ee=best[0],
        best_powers=powers[pi].copy(),
        best_layout=layouts[li].copy(),
        best_beta=float(betas[bi]),
        grid_sizes={"beta": len(betas), "power": len(powers), "layout": len(layouts),
                    "beta_points": beta_points, "power_points": power_points, "position_points": position_points},
        evaluations=total,
        feasible_points=feasible_points,
    )


# ------------------------------------------------------------ policies

@dataclass(frozen=True)
class PolicySpec:
    kind: str
    grid_points: int | None = None  # discrete; None -> default_grid_points(N)
    offset_steps: int = 21  # continuous_constrained
    layout: tuple | None = None  # fixed; None -> uniform layout

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise ConfigError(f"unknown policy kind {self.kind!r}; expected one of {POLICY_KINDS}")
        if self.grid_points is not None and self.grid_points < 1:
            raise ConfigError("grid_points must be >= 1")
        if self.offset_steps < 1:
            raise ConfigError("offset_steps must be >= 1")

    @property
    def access(self) -> str:
        return "oma" if self.kind == "oma_drl" else "noma"


class ConstantPolicy:
    """Returns the same raw action for every observation."""

    def __init__(self, raw):
        self.raw = np.asarray(raw, dtype=float)

    def policy(self, obs):
        return self.raw.copy()


def zero_power_policy(cfg: SystemConfig, beta: float = 0.0) -> ConstantPolicy:
    raw = np.zeros(cfg.action_dim)
    raw[: cfg.num_users] = -1.0
    raw[-1] = 2.0 * beta - 1.0
    return ConstantPolicy(raw)


def choose_layout(spec: PolicySpec, env: PinchingEnv, raw) -> np.ndarray | None:
    """Layout override for ``spec`` given the actor's raw action, or None for DRL."""
    cfg = env.cfg
    if spec.kind in ("drl", "oma_drl"):
        return None
    if spec.kind == "fixed":
        return np.asarray(spec.layout, dtype=float) if spec.layout is not None else fixed_layout_policy(cfg)
    k = cfg.num_users
    raw = np.clip(np.asarray(raw, dtype=float), -1.0, 1.0)
    powers = (raw[:k] + 1.0) / 2.0 * cfg.max_tx_power_w
    beta = float((raw[-1] + 1.0) / 2.0)
    if spec.kind == "discrete":
        g = spec.grid_points or default_grid_points(cfg.num_pas)
        return discrete_position_search(env.state, cfg, g, powers, beta, env.access)
    return equal_spacing_offset_search(env.state, cfg, spec.offset_steps, powers, beta, env.access)


@dataclass
class EvalStats:
    policy: str
    seeds: list
    episodes: int
    mean_ee: float
    median_ee: float
    std_ee: float
    satisfaction: float
    mean_harvested_j: float
    per_seed_mean_ee: dict = field(default_factory=dict)
    episode_ee: list = field(default_factory=list)


def run_episode(spec: PolicySpec, actor, cfg: SystemConfig, seed: int, *path) -> dict:
    env = PinchingEnv(cfg, access=spec.access)
    obs = env.reset(seed, *path)
    ee_sum, satisfied, harvested, slots = 0.0, 0, 0.0, 0
    done = False
    while not done:
        raw = actor.policy(obs)
        layout = choose_layout(spec, env, raw)
        obs, _, done, out = env.step(raw, layout=layout)
        ee_sum += out.feasible_ee
        satisfied += int(np.sum(out.rates_bpshz >= cfg.min_rate_bpshz))
        harvested += float(np.sum(out.harvested_j))
        slots += 1
    k = cfg.num_users
    return {"ee_sum": ee_sum, "satisfaction": satisfied / (slots * k), "harvested": harvested / (slots * k)}


def evaluate_policy(spec: PolicySpec, cfg: SystemConfig, actor, episodes: int, seeds) -> EvalStats:
    """Frozen-policy statistics of the per-episode EE sum over a seed set.

    Episode ``j`` of seed ``s`` always sees the same environment draw, and
    results are pooled in sorted seed order so the seed list order is
    irrelevant.
    """
    seeds = sorted(set(int(s) for s in seeds))
    if not seeds:
        raise ValueError("evaluate_policy needs at least one seed")
    rows, per_seed = [], {}
    for s in seeds:
        eps = [run_episode(spec, actor, cfg, s, "eval", j) for j in range(episodes)]
        rows.extend(eps)
        per_seed[s] = float(np.mean([r["ee_sum"] for r in eps]))
    ee = np.array([r["ee_sum"] for r in rows])
    return EvalStats(
        policy=spec.kind,
        seeds=seeds,
        episodes=episodes,
        mean_ee=float(np.mean(ee)),
        median_ee=float(np.median(ee)),
        std_ee=float(np.std(ee)),
        satisfaction=float(np.mean([r["satisfaction"] for r in rows])),
        mean_harvested_j=float(np.mean([r["harvested"] for r in rows])),
        per_seed_mean_ee=per_seed,
        episode_ee=ee.tolist(),
    )


ORACLE_FIELDS = ("best_ee", "best_beta", "best_powers", "best_layout", "evaluations", "feasible_points")


def write_oracle_csv(path, result: OracleResult, seed: int) -> None:
    gs = result.grid_sizes
    with open(Path(path), "w", newline="") as fh:
        fh.write(f"# grid beta={gs['beta']} power={gs['power']} layout={gs['layout']} seed={seed}\n")
        w = csv.writer(fh)
        w.writerow(ORACLE_FIELDS)
        w.writerow([repr(result.best_ee), repr(result.best_beta),
                    " ".join(repr(float(p)) for p in result.best_powers),
                    " ".join(repr(float(x)) for x in result.best_layout),
                    result.evaluations, result.feasible_points])
