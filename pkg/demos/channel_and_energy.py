"""Walk through one slot by hand: channel, harvested energy, rates, EE."""
import numpy as np

from pinchnoma.channel import channel_gains, project_layout
from pinchnoma.config import SystemConfig
from pinchnoma.energy import feasible_power_cap, harvested_energy
from pinchnoma.rates import ee_value, noma_rates

cfg = SystemConfig()
print("wavelength %.4f m, guided %.4f m, d_min %.4f m" % (cfg.wavelength_m, cfg.guided_wavelength_m, cfg.min_spacing_m))

users = np.array([[8.0, 3.0], [25.0, -6.0], [41.0, 7.5]])

# a raw layout with two PAs on top of each other gets pushed apart
layout = project_layout([9.0, 9.0, 26.0], cfg)
print("layout", layout)

h = channel_gains(users, layout, cfg)
print("|H|^2", np.abs(h) ** 2)

# attenuation along the guide hurts users far from the feed
far = channel_gains(users, layout + 20.0, cfg)
print("shifted 20 m down the guide, |H|^2", np.abs(far) ** 2)

beta = 0.4
a, b, iota = cfg.eh.arrays(cfg.num_users)
rx = cfg.bs_wpt_power_w * np.abs(h) ** 2
e_h = harvested_energy(beta, cfg.slot_duration_s, rx, a, b, iota)
print("harvested (J)", e_h)

cap_j, eta, e_f = cfg.battery.arrays(cfg.num_users)
battery = np.array([0.002, 0.03, 0.08])
p_cap = feasible_power_cap(battery, eta, e_h, beta, cfg.slot_duration_s, e_f, cfg.max_tx_power_w)
print("power caps (W)", p_cap)

powers = np.minimum([0.05, 0.05, 0.05], p_cap)
rep = noma_rates(powers, h, cfg.noise_power_w, beta)
print("decode order", rep.order, "rates", np.round(rep.per_user_rate_bpshz, 3))
print("EE %.2f bit/s/Hz/W" % ee_value(rep, powers, cfg.fixed_circuit_power_w))
