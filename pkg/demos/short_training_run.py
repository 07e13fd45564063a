"""Train a small DDPG agent for a few hundred episodes and evaluate it against the benchmarks.

Takes about a minute on one core. The full-length runs use the CLI:
    python -m pinchnoma train --config demos/default.json
"""
from pinchnoma.baselines import PolicySpec, evaluate_policy
from pinchnoma.config import AgentConfig, SystemConfig
from pinchnoma.ddpg import train
from pinchnoma.env import PinchingEnv

cfg = SystemConfig()
res = train(lambda: PinchingEnv(cfg), AgentConfig(), episodes=300, seed=0)
r = res.returns
print("mean return, first 30 episodes %.1f, last 30 %.1f" % (r[:30].mean(), r[-30:].mean()))

for kind in ("drl", "discrete", "continuous_constrained", "fixed"):
    st = evaluate_policy(PolicySpec(kind), cfg, res.agent, episodes=5, seeds=[0])
    print("%-24s episode EE %.2f  rate floor met %.0f%%" % (kind, st.mean_ee, 100 * st.satisfaction))
