"""Harvest-then-transmit energy accounting.

Every function broadcasts over numpy arrays so one call can handle all users
of a slot (or a whole search grid).
"""
from __future__ import annotations

import numpy as np


def _check_beta(beta):
    b = np.asarray(beta, dtype=float)
    if np.any((b < 0) | (b > 1)):
        raise ValueError("time-switching ratio must lie in [0, 1]")
    return b


def eh_offset(a, b):
    """Omega = 1 / (1 + exp(a b)): sigmoid output at zero input."""
    return 1.0 / (1.0 + np.exp(np.asarray(a, dtype=float) * b))


def harvested_energy(beta, ts, rx_power_w, a, b, iota):
    """Energy (J) collected during the harvesting fraction of a slot.

    Uses the logistic rectifier model shifted so that zero input harvests
    nothing and an infinite input saturates at ``iota`` watts.
    """
    beta = _check_beta(beta)
    rx = np.asarray(rx_power_w, dtype=float)
    if np.any(rx < 0) or np.any(np.asarray(ts) < 0):
        raise ValueError("received power and slot duration must be non-negative")
    a = np.asarray(a, dtype=float)
    omega = eh_offset(a, b)
    # same expression as omega at rx == 0, so zero input cancels exactly
    sig = 1.0 / (1.0 + np.exp(-a * (rx - b)))
    power = iota * (sig - omega) / (1.0 - omega)
    return beta * ts * power


def consumed_energy(beta, ts, tx_power_w, fixed_energy_j, share=1.0):
    """Transmit energy over the uplink fraction plus the fixed circuit energy.

    ``share`` is the fraction of the uplink phase during which the user
    actually transmits (1 for NOMA, 1/K for TDMA-style OMA).
    """
    beta = _check_beta(beta)
    p = np.asarray(tx_power_w, dtype=float)
    if np.any(p < 0):
        raise ValueError("transmit power must be non-negative")
    return (1.0 - beta) * share * ts * p + fixed_energy_j


def feasible_power_cap(battery_j, eta, harvested_j, beta, ts, fixed_energy_j, p_max, share=1.0):
    """Largest transmit power whose slot consumption fits the energy budget.

    Returns ``min(p_max, max(0, (B + eta E - E_f) / ((1 - beta) share T_s)))``.
    With no uplink phase (``beta == 1``) the budget places no limit on power,
    so the hardware cap is returned whenever the circuit energy is covered.
    """
    beta = _check_beta(beta)
    budget = np.asarray(battery_j, dtype=float) + eta * np.asarray(harvested_j, dtype=float) - fixed_energy_j
    airtime = (1.0 - beta) * share * ts
    with np.errstate(divide="ignore", invalid="ignore"):
        cap = np.where(airtime > 0, np.maximum(budget, 0.0) / np.where(airtime > 0, airtime, 1.0), np.inf)
    cap = np.where(budget > 0, cap, 0.0)
    return np.minimum(cap, p_max)


def battery_update(battery_j, eta, harvested_j, consumed_j, capacity_j):
    """Stored energy at the start of the next slot, clamped to [0, capacity]."""
    level = np.asarray(battery_j, dtype=float) + eta * np.asarray(harvested_j, dtype=float) - consumed_j
    return np.minimum(capacity_j, np.maximum(level, 0.0))
