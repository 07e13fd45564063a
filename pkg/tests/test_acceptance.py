"""Acceptance criteria 1-7, each reported as one pass/fail line.

Criteria 4-6 train real agents and take tens of minutes on one core; they
carry the ``slow`` marker so ``pytest -m "not slow"`` skips them.
"""
import json
import math
import time

import numpy as np
import pytest

from gradcheck import check_net, numeric_param_grads, random_net, rel_err
from pinchnoma.baselines import (PolicySpec, brute_force_oracle, discrete_position_search, evaluate_policy,
                                 grid_layouts)
from pinchnoma.channel import power_split
from pinchnoma.cli import main, oracle_check
from pinchnoma.config import AgentConfig, ExperimentConfig, SystemConfig, UncertaintyParams
from pinchnoma.ddpg import DDPGAgent, train
from pinchnoma.energy import harvested_energy
from pinchnoma.env import ActionVector, PinchingEnv, reset_state, step
from pinchnoma.rates import noma_rates
from pinchnoma.rng import stream

SEEDS = (0, 1, 2, 3, 4)


# ---------------------------------------------------------------- 1

def test_criterion_1_physics_identities(report):
    t0 = time.time()
    fails = []
    a, b, iota = 150.0, 0.0014, 0.024
    if harvested_energy(0.6, 1.0, 0.0, a, b, iota) != 0.0:
        fails.append("EH(0) != 0")
    sat = harvested_energy(1.0, 1.0, b + 100 / a, a, b, iota)
    if abs(sat - iota) > 1e-9 * iota:
        fails.append(f"EH saturation off by {abs(sat - iota):.3e}")

    rng = stream(1, "acceptance", "psi")
    worst_psi = 0.0
    for _ in range(1000):
        delta, n = rng.uniform(1e-3, 1.0), int(rng.integers(1, 17))
        total = float(np.sum(power_split(np.arange(1, n + 1), delta)))
        worst_psi = max(worst_psi, abs(total - (1 - (1 - delta**2) ** n)))
    if worst_psi > 1e-12:
        fails.append(f"power split identity error {worst_psi:.2e}")

    worst_sic = 0.0
    for _ in range(1000):
        k = int(rng.integers(1, 7))
        p = rng.uniform(0, 0.1, k)
        h = (rng.normal(size=k) + 1j * rng.normal(size=k)) * 10 ** rng.uniform(-6, -3)
        beta = rng.uniform(0, 1)
        got = noma_rates(p, h, 1e-12, beta).sum_rate_bpshz
        want = (1 - beta) * math.log2(1 + float(np.sum(p * np.abs(h) ** 2)) / 1e-12)
        worst_sic = max(worst_sic, abs(got - want) / max(abs(want), 1e-300))
    if worst_sic > 1e-9:
        fails.append(f"SIC telescoping error {worst_sic:.2e}")

    cfg = SystemConfig()
    cap, eta, _ = cfg.battery.arrays(cfg.num_users)
    worst_causal, out_of_range = 0.0, 0
    for ep in range(100):
        env = PinchingEnv(cfg, access="oma" if ep % 5 == 0 else "noma")
        env.reset(ep, "acceptance")
        act_rng = stream(ep, "acceptance", "actions")
        done = False
        while not done:
            before = env.state.true_batteries_j.copy()
            _, _, done, out = env.step(act_rng.uniform(-1, 1, cfg.action_dim))
            worst_causal = max(worst_causal, float(np.max(out.consumed_j - before - eta * out.harvested_j)))
            bat = env.state.true_batteries_j
            out_of_range += int(np.sum((bat < 0) | (bat > cap)))
    if worst_causal > 1e-12:
        fails.append(f"causality violated by {worst_causal:.2e} J")
    if out_of_range:
        fails.append(f"{out_of_range} battery values outside [0, B_max]")

    detail = (f"psi err {worst_psi:.1e}, SIC rel err {worst_sic:.1e}, causality slack {worst_causal:.1e} J, "
              f"{time.time() - t0:.1f}s") if not fails else "; ".join(fails)
    report(1, not fails, detail)
    assert not fails


# ---------------------------------------------------------------- 2

def test_criterion_2_gradients(report):
    t0 = time.time()
    rng = np.random.default_rng(2024)
    worst = 0.0
    for i in range(50):
        n_in = int(rng.integers(2, 6))
        worst = max(worst, check_net(random_net(rng, n_in, int(rng.integers(1, 4)), "tanh"), rng))
        worst = max(worst, check_net(random_net(rng, n_in, 1, "linear", norm=True), rng))
    # actor gradients through a normalized critic (the policy-gradient chain)
    for i in range(10):
        obs_dim, act_dim = int(rng.integers(2, 5)), int(rng.integers(1, 4))
        agent = DDPGAgent(obs_dim, act_dim, AgentConfig(hidden_sizes=(4, 3), batch_size=2, buffer_size=4), seed=i)
        for k in agent.actor.params:
            agent.actor.params[k] = rng.normal(0, 0.6, agent.actor.params[k].shape)
        obs = rng.normal(size=(3, obs_dim))
        _, grads = agent.actor_gradients(obs)
        num = numeric_param_grads(lambda: agent.actor_gradients(obs)[0], agent.actor.params)
        worst = max(worst, max(rel_err(grads[k], num[k]) for k in grads))
    ok = worst < 1e-4 and time.time() - t0 < 30
    report(2, ok, f"worst relative error {worst:.2e} over 100 nets + 10 actor chains, {time.time() - t0:.1f}s")
    assert ok


# ---------------------------------------------------------------- 3

def test_criterion_3_oracle_consistency(report):
    t0 = time.time()
    cfg = SystemConfig(num_users=2, num_pas=1, uncertainty=UncertaintyParams.off())
    worst_replay, mismatches, checked = 0.0, 0, 0
    for seed in range(3):
        st = reset_state(cfg, stream(seed, "acceptance", "oracle"))
        orc = brute_force_oracle(st, cfg, 11, 11, 8)
        assert orc.evaluations == 11 * 11**2 * 8
        if orc.feasible:
            action = ActionVector(np.zeros(cfg.action_dim), orc.best_powers, orc.best_layout, orc.best_beta)
            out = step(st, action, cfg, stream(seed, "replay"))
            worst_replay = max(worst_replay, abs(out.reward - orc.best_ee) / orc.best_ee)
            checked += 1
        rng = stream(seed, "acceptance", "fixed-heads")
        for _ in range(5):
            powers, beta = rng.choice(np.linspace(0, 0.1, 11), 2), float(rng.choice(np.linspace(0, 1, 11)))
            layout = discrete_position_search(st, cfg, 8, powers, beta, use_estimates=False)
            restricted = brute_force_oracle(st, cfg, betas=[beta], powers=[powers], layouts=grid_layouts(cfg, 8))
            if restricted.feasible and not np.array_equal(layout, restricted.best_layout):
                mismatches += 1
    ok = checked > 0 and worst_replay <= 1e-9 and mismatches == 0 and time.time() - t0 < 60
    report(3, ok, f"replay rel err {worst_replay:.1e} on {checked} states, discrete/oracle mismatches {mismatches}, "
                  f"{time.time() - t0:.1f}s")
    assert ok


# ---------------------------------------------------------------- 4

@pytest.mark.slow
def test_criterion_4_learning_progress(report):
    t0 = time.time()
    cfg = SystemConfig()
    improved = []
    for seed in SEEDS:
        r = train(lambda: PinchingEnv(cfg), AgentConfig(), 300, seed).returns
        improved.append((float(np.mean(r[:30])), float(np.mean(r[-30:]))))
    wins = sum(last > first for first, last in improved)
    elapsed = time.time() - t0
    ok = wins >= 4 and elapsed < 600
    pairs = ", ".join(f"{a:.1f}->{b:.1f}" for a, b in improved)
    report(4, ok, f"{wins}/5 seeds improved (first30->last30: {pairs}), {elapsed:.0f}s")
    assert ok


# ---------------------------------------------------------------- 5

@pytest.mark.slow
def test_criterion_5_near_optimality(report):
    t0 = time.time()
    system = SystemConfig(num_users=2, num_pas=1, uncertainty=UncertaintyParams.off())
    cfg = ExperimentConfig(system=system)
    ratios = []
    for seed in SEEDS:
        agent = train(lambda: PinchingEnv(system), cfg.agent, 2000, seed).agent
        # one frozen instance (instance seed 0) shared by all trained agents
        rep, _ = oracle_check(cfg, agent, 0)
        ratios.append(rep["ratio"])
    med = float(np.median(ratios))
    elapsed = time.time() - t0
    ok = med >= 0.8 and elapsed < 900
    report(5, ok, f"median agent/oracle EE {med:.3f} (per seed {np.round(ratios, 3).tolist()}), {elapsed:.0f}s")
    assert ok


# ---------------------------------------------------------------- 6

C6_EPISODES = 500


def _drl_means(system, episodes, access="noma"):
    out = {}
    for seed in SEEDS:
        agent = train(lambda: PinchingEnv(system, access=access), AgentConfig(), episodes, seed).agent
        out[seed] = agent
    return out


@pytest.mark.slow
def test_criterion_6_benchmark_ordering(report):
    t0 = time.time()
    base = SystemConfig()
    ev = lambda kind, system, agent, seed: evaluate_policy(PolicySpec(kind), system, agent, 5, [seed]).mean_ee

    agents = {}
    for n in (1, 2, 3):
        agents[("pas", n)] = _drl_means(base.replace(num_pas=n), C6_EPISODES)
    for k in (1, 2, 4):
        agents[("users", k)] = _drl_means(base.replace(num_users=k), C6_EPISODES)
    agents[("users", 3)] = agents[("pas", 3)]
    oma_agents = _drl_means(base, C6_EPISODES, access="oma")

    table = {kind: [ev(kind, base, agents[("pas", 3)][s], s) for s in SEEDS]
             for kind in ("drl", "discrete", "fixed")}
    table["oma_drl"] = [ev("oma_drl", base, oma_agents[s], s) for s in SEEDS]
    order_wins = sum(d >= c >= f for d, c, f in zip(table["drl"], table["discrete"], table["fixed"]))
    oma_wins = sum(n >= o for n, o in zip(table["drl"], table["oma_drl"]))

    by_n = [np.mean([ev("drl", base.replace(num_pas=n), agents[("pas", n)][s], s) for s in SEEDS]) for n in (1, 2, 3)]
    by_k = [np.mean([ev("drl", base.replace(num_users=k), agents[("users", k)][s], s) for s in SEEDS])
            for k in (1, 2, 3, 4)]
    n_ok = by_n[0] <= by_n[1] <= by_n[2] and (by_n[2] - by_n[1]) < (by_n[1] - by_n[0])
    k_ok = all(x >= y for x, y in zip(by_k, by_k[1:]))
    elapsed = time.time() - t0

    checks = {"drl>=discrete>=fixed": order_wins >= 4, "noma>=oma": oma_wins >= 4, "N trend": n_ok,
              "K trend": k_ok, "time": elapsed < 1800}
    ok = all(checks.values())
    fmt = lambda xs: "[" + ", ".join(f"{x:.1f}" for x in xs) + "]"
    detail = (f"ordering {order_wins}/5 (drl {fmt(table['drl'])}, discrete {fmt(table['discrete'])}, "
              f"fixed {fmt(table['fixed'])}); noma>=oma {oma_wins}/5 (oma {fmt(table['oma_drl'])}); "
              f"EE vs N {fmt(by_n)}; EE vs K {fmt(by_k)}; failed: "
              f"{[k for k, v in checks.items() if not v] or 'none'}; {elapsed:.0f}s")
    report(6, ok, detail)
    assert ok


# ---------------------------------------------------------------- 7

def _snapshot(root):
    files = {}
    for p in sorted(root.rglob("*")):
        if p.is_file():
            data = p.read_bytes()
            if p.name == "summary.json":
                doc = json.loads(data)
                doc.pop("wall_time_s")
                data = json.dumps(doc, sort_keys=True).encode()
            files[str(p.relative_to(root))] = data
    return files


def test_criterion_7_determinism(report, tmp_path):
    doc = {"num_users": 2, "num_pas": 1, "episode_slots": 4,
           "agent": {"hidden_sizes": [16], "batch_size": 8, "buffer_size": 200},
           "run": {"seeds": [0, 1], "episodes": 6, "eval_episodes": 2}}
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(doc))
    snaps = []
    for name in ("a", "b"):
        root = tmp_path / name
        codes = [
            main(["train", "--config", str(cfg), "--out", str(root / "train")]),
            main(["eval", "--config", str(cfg), "--policy", "continuous_constrained",
                  "--checkpoint", str(root / "train" / "checkpoint.npz"), "--out", str(root / "eval")]),
            main(["sweep", "--config", str(cfg), "--axis", "users", "--values", "1,2", "--out", str(root / "sweep")]),
            main(["oracle-check", "--config", str(cfg), "--checkpoint", str(root / "train" / "checkpoint.npz"),
                  "--out", str(root / "oracle")]),
        ]
        assert codes == [0, 0, 0, 0]
        snaps.append(_snapshot(root))
    differing = [k for k in snaps[0] if snaps[0][k] != snaps[1].get(k)]
    ok = not differing and snaps[0].keys() == snaps[1].keys()
    report(7, ok, f"{len(snaps[0])} output files compared, differing: {differing or 'none'}")
    assert ok
