"""Brute-force the best single-slot action on a small instance and compare placement rules."""
import numpy as np

from pinchnoma.baselines import (brute_force_oracle, discrete_position_search, equal_spacing_offset_search,
                                 evaluate_grid, fixed_layout_policy)
from pinchnoma.config import SystemConfig, UncertaintyParams
from pinchnoma.env import ActionVector, reset_state, step
from pinchnoma.rng import stream

cfg = SystemConfig(num_users=2, num_pas=1, uncertainty=UncertaintyParams.off())
state = reset_state(cfg, stream(0, "demo"))
print("users", state.true_positions.round(2).tolist(), "batteries", state.true_batteries_j.round(4).tolist())

orc = brute_force_oracle(state, cfg)
print("oracle EE %.3f at beta %.1f, powers %s, PA at %.2f m (%d points, %d feasible)"
      % (orc.best_ee, orc.best_beta, orc.best_powers, orc.best_layout[0], orc.evaluations, orc.feasible_points))

# the oracle's action survives a trip through the environment unchanged
act = ActionVector(np.zeros(cfg.action_dim), orc.best_powers, orc.best_layout, orc.best_beta)
print("replayed reward %.3f" % step(state, act, cfg, stream(0, "replay")).reward)

# keep the oracle's powers and beta, only change how the PA is placed
p, beta = orc.best_powers, orc.best_beta
layouts = {
    "fixed": fixed_layout_policy(cfg),
    "discrete": discrete_position_search(state, cfg, 8, p, beta),
    "continuous": equal_spacing_offset_search(state, cfg, 61, p, beta),
}
for name, lay in layouts.items():
    ev = evaluate_grid(cfg, state.true_positions, state.true_batteries_j, [lay], [beta], [p], power_mode="clip")
    print("%-10s PA at %6.2f m  EE %.3f" % (name, lay[0], ev.ee[0, 0, 0]))
