"""Command-line entry point: ``python -m pinchnoma <command> ...``.

Exit status is 0 on success, 2 on configuration or usage errors and 1 on
any other failure.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from .baselines import POLICY_KINDS, PolicySpec, brute_force_oracle, evaluate_policy, write_oracle_csv
from .config import ConfigError, ExperimentConfig, load_config, parse_int_list
from .ddpg import LOG_FIELDS, DDPGAgent, train
from .env import ActionVector, PinchingEnv, decode_action, evaluate_slot, observation, reset_state, step
from .rng import stream

log = logging.getLogger("pinchnoma")

EVAL_FIELDS = ("policy", "seeds", "episodes", "mean_ee", "median_ee", "std_ee", "satisfaction", "mean_harvested_j")
SWEEP_FIELDS = ("axis_value", "policy", "mean_ee", "std_ee")
SWEEP_SEED_FIELDS = ("axis_value", "policy", "seed", "mean_ee")
SWEEP_POLICIES = ("drl", "fixed", "discrete", "continuous_constrained", "oma_drl")


class UsageError(Exception):
    pass


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, fields, rows) -> None:
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(fields)
        for row in rows:
            w.writerow([_fmt(row[f]) for f in fields])


def read_csv(path, fields) -> list[dict]:
    """Parse a CSV written by this tool, checking the header against ``fields``."""
    with open(Path(path), newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.DictReader(lines)
    if tuple(reader.fieldnames or ()) != tuple(fields):
        raise ValueError(f"{path}: header {reader.fieldnames} does not match {list(fields)}")
    rows = []
    for raw in reader:
        row = {}
        for k, v in raw.items():
            try:
                row[k] = int(v)
            except ValueError:
                try:
                    row[k] = float(v)
                except ValueError:
                    row[k] = v
        rows.append(row)
    return rows


def _write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _with_run(cfg: ExperimentConfig, **changes) -> ExperimentConfig:
    changes = {k: v for k, v in changes.items() if v is not None}
    return dataclasses.replace(cfg, run=dataclasses.replace(cfg.run, **changes)) if changes else cfg


def _out_dir(cfg: ExperimentConfig, out: str | None) -> Path:
    path = Path(out) if out else Path(cfg.run.output_dir) / cfg.run.experiment_id
    path.mkdir(parents=True, exist_ok=True)
    return path


def _progress(row):
    if row["episode"] % 50 == 0:
        log.info("episode %d  return %.3f  avg100 %.3f", row["episode"], row["return"], row["moving_avg_100"])


def train_agent(cfg: ExperimentConfig, seed: int, episodes: int, access: str = "noma"):
    system = cfg.system
    return train(lambda: PinchingEnv(system, access=access), cfg.agent, episodes, seed, progress=_progress)


def eval_row(stats) -> dict:
    return {
        "policy": stats.policy,
        "seeds": " ".join(str(s) for s in stats.seeds),
        "episodes": stats.episodes,
        "mean_ee": stats.mean_ee,
        "median_ee": stats.median_ee,
        "std_ee": stats.std_ee,
        "satisfaction": stats.satisfaction,
        "mean_harvested_j": stats.mean_harvested_j,
    }


# ------------------------------------------------------------ commands

def cmd_train(args) -> int:
    cfg = load_config(args.config)
    seed = args.seed if args.seed is not None else cfg.run.seeds[0]
    cfg = _with_run(cfg, episodes=args.episodes, seeds=(seed,))
    out = _out_dir(cfg, args.out)
    t0 = time.time()
    result = train_agent(cfg, seed, cfg.run.episodes)
    wall = time.time() - t0

    (out / "config.json").write_text(cfg.canonical_json() + "\n")
    write_csv(out / "train_log.csv", LOG_FIELDS, result.log)
    result.agent.save(out / "checkpoint.npz")
    stats = evaluate_policy(PolicySpec("drl"), cfg.system, result.agent, cfg.run.eval_episodes, [seed])
    write_csv(out / "eval.csv", EVAL_FIELDS, [eval_row(stats)])
    _write_json(out / "summary.json", {
        "experiment_id": cfg.run.experiment_id,
        "seed": seed,
        "episodes": cfg.run.episodes,
        "final_moving_avg_100": result.log[-1]["moving_avg_100"],
        "eval_mean_ee": stats.mean_ee,
        "config_hash": cfg.config_hash(),
        "wall_time_s": wall,
    })
    print(f"wrote {out}")
    return 0


def sweep_configs(cfg: ExperimentConfig, axis: str, values):
    field = {"pas": "num_pas", "users": "num_users"}.get(axis)
    if field is None:
        raise UsageError(f"--axis must be 'pas' or 'users', got {axis!r}")
    for v in values:
        if v < 1:
            raise ConfigError(f"sweep values must be positive integers, got {v}")
        yield v, dataclasses.replace(cfg, system=cfg.system.replace(**{field: v}))


def run_sweep(cfg: ExperimentConfig, axis: str, values, seeds, policies=SWEEP_POLICIES):
    """Train and evaluate every policy for each axis value and seed.

    Returns ``(summary_rows, per_seed_rows)``.
    """
    summary, per_seed = [], []
    for value, vcfg in sweep_configs(cfg, axis, values):
        agents = {}
        for s in seeds:
            agents[("noma", s)] = train_agent(vcfg, s, vcfg.run.episodes).agent
            if "oma_drl" in policies:
                agents[("oma", s)] = train_agent(vcfg, s, vcfg.run.episodes, access="oma").agent
        for kind in policies:
            spec = PolicySpec(kind)
            seed_means = []
            for s in seeds:
                agent = agents[(spec.access, s)]
                st = evaluate_policy(spec, vcfg.system, agent, vcfg.run.eval_episodes, [s])
                seed_means.append(st.mean_ee)
                per_seed.append({"axis_value": value, "policy": kind, "seed": s, "mean_ee": st.mean_ee})
            summary.append({"axis_value": value, "policy": kind, "mean_ee": float(np.mean(seed_means)),
                            "std_ee": float(np.std(seed_means))})
    return summary, per_seed


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    values = parse_int_list(args.values)
    seeds = parse_int_list(args.seeds) if args.seeds else list(cfg.run.seeds)
    cfg = _with_run(cfg, episodes=args.episodes, seeds=tuple(seeds))
    out = _out_dir(cfg, args.out)
    summary, per_seed = run_sweep(cfg, args.axis, values, seeds)
    (out / "config.json").write_text(cfg.canonical_json() + "\n")
    write_csv(out / f"sweep_{args.axis}.csv", SWEEP_FIELDS, summary)
    write_csv(out / f"sweep_{args.axis}_per_seed.csv", SWEEP_SEED_FIELDS, per_seed)
    print(f"wrote {out / f'sweep_{args.axis}.csv'}")
    return 0


def cmd_eval(args) -> int:
    cfg = load_config(args.config)
    spec = PolicySpec(args.policy)
    agent = DDPGAgent.load(args.checkpoint)
    _check_agent(agent, cfg)
    out = _out_dir(cfg, args.out)
    stats = evaluate_policy(spec, cfg.system, agent, cfg.run.eval_episodes, cfg.run.seeds)
    write_csv(out / f"eval_{spec.kind}.csv", EVAL_FIELDS, [eval_row(stats)])
    print(json.dumps(eval_row(stats), sort_keys=True))
    return 0


def _check_agent(agent: DDPGAgent, cfg: ExperimentConfig) -> None:
    if agent.obs_dim != cfg.system.obs_dim or agent.act_dim != cfg.system.action_dim:
        raise ConfigError(
            f"checkpoint dimensions (obs {agent.obs_dim}, action {agent.act_dim}) do not match the config "
            f"(obs {cfg.system.obs_dim}, action {cfg.system.action_dim})"
        )


def oracle_check(cfg: ExperimentConfig, agent, seed: int):
    """Compare the agent's single-slot action with the oracle on one frozen state.

    Returns ``(report, oracle_result)``.
    """
    system = cfg.system
    if system.num_users > 2 or system.num_pas > 2:
        raise UsageError("oracle-check is limited to num_users <= 2 and num_pas <= 2")
    state = reset_state(system, stream(seed, "oracle-check"))
    oracle = brute_force_oracle(state, system)

    act = decode_action(agent.policy(observation(state, system)), state, system)
    slot = evaluate_slot(system, state.true_positions, state.true_batteries_j, act.powers_w, act.layout, act.beta)
    agent_ee = 0.0 if slot.rate_violation else slot.ee

    # replay the oracle's choice through the environment dynamics
    replay_ee = float("nan")
    if oracle.feasible:
        action = ActionVector(raw=np.zeros(system.action_dim), powers_w=oracle.best_powers,
                              layout=oracle.best_layout, beta=oracle.best_beta)
        replay_ee = step(state, action, system, stream(seed, "oracle-replay")).ee
    ratio = agent_ee / oracle.best_ee if oracle.feasible and oracle.best_ee > 0 else float("nan")
    return {
        "seed": seed,
        "oracle_ee": oracle.best_ee,
        "oracle_replay_ee": replay_ee,
        "agent_ee": agent_ee,
        "ratio": ratio,
        "oracle_beta": oracle.best_beta,
        "oracle_powers": oracle.best_powers.tolist(),
        "oracle_layout": oracle.best_layout.tolist(),
        "agent_beta": act.beta,
        "agent_powers": act.powers_w.tolist(),
        "agent_layout": act.layout.tolist(),
        "grid_sizes": oracle.grid_sizes,
        "evaluations": oracle.evaluations,
    }, oracle


def cmd_oracle_check(args) -> int:
    cfg = load_config(args.config)
    seed = args.seed if args.seed is not None else cfg.run.seeds[0]
    agent = DDPGAgent.load(args.checkpoint)
    _check_agent(agent, cfg)
    report, oracle = oracle_check(cfg, agent, seed)
    out = _out_dir(cfg, args.out)
    write_oracle_csv(out / "oracle.csv", oracle, seed)
    _write_json(out / "oracle_report.json", report)
    print(json.dumps(report, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pinchnoma", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log training progress")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train a DDPG agent")
    t.add_argument("--config", required=True)
    t.add_argument("--seed", type=int)
    t.add_argument("--episodes", type=int)
    t.add_argument("--out")
    t.set_defaults(func=cmd_train)

    s = sub.add_parser("sweep", help="EE versus number of PAs or users")
    s.add_argument("--config", required=True)
    s.add_argument("--axis", required=True, choices=("pas", "users"))
    s.add_argument("--values", required=True, help="comma-separated positive integers")
    s.add_argument("--seeds", help="comma-separated seeds (default: config run.seeds)")
    s.add_argument("--episodes", type=int)
    s.add_argument("--out")
    s.set_defaults(func=cmd_sweep)

    e = sub.add_parser("eval", help="evaluate a frozen policy")
    e.add_argument("--config", required=True)
    e.add_argument("--policy", required=True, choices=POLICY_KINDS)
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--out")
    e.set_defaults(func=cmd_eval)

    o = sub.add_parser("oracle-check", help="compare an agent with the brute-force oracle")
    o.add_argument("--config", required=True)
    o.add_argument("--checkpoint", required=True)
    o.add_argument("--seed", type=int)
    o.add_argument("--out")
    o.set_defaults(func=cmd_oracle_check)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (ConfigError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
