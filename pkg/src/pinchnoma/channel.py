"""Pinching-antenna geometry and channel coefficients.

Users sit on the ground plane at ``(x, y, 0)``; PA ``n`` radiates from
``(x_n, 0, h_PA)`` on a waveguide fed at ``x_0``. The channel between a user
and one PA is the product of a free-space term and a waveguide term
(coupling share, dielectric loss, guided phase); the composite channel of a
user is the coherent sum over all PAs.
"""
from __future__ import annotations

import numpy as np

from .config import SPEED_OF_LIGHT, ConfigError, SystemConfig


def wavelengths(cfg: SystemConfig) -> tuple[float, float]:
    """Return ``(lambda, lambda_g)`` in meters."""
    lam = SPEED_OF_LIGHT / cfg.carrier_frequency_hz
    return lam, lam / cfg.effective_refractive_index


def free_space_coeff(user_xyz, pa_xyz, lam: float) -> complex:
    dist = float(np.linalg.norm(np.asarray(pa_xyz, dtype=float) - np.asarray(user_xyz, dtype=float)))
    if dist == 0.0:
        raise ValueError("user and PA positions coincide")
    return lam / (4.0 * np.pi * dist) * np.exp(-2j * np.pi * dist / lam)


def power_split(n, delta: float):
    """Share of the guided power radiated by PA ``n`` (1-based)."""
    d2 = delta * delta
    return d2 * (1.0 - d2) ** (np.asarray(n) - 1)


def waveguide_loss(path_m, mu_db_per_m: float):
    return 10.0 ** (-mu_db_per_m * np.abs(path_m) / 10.0)


def waveguide_coeff(n: int, x_n: float, cfg: SystemConfig) -> complex:
    if not 1 <= n <= cfg.num_pas:
        raise ValueError(f"antenna index {n} outside 1..{cfg.num_pas}")
    if not 0.0 <= x_n <= cfg.waveguide_length_m:
        raise ValueError(f"PA position {x_n} outside [0, {cfg.waveguide_length_m}]")
    _, lam_g = wavelengths(cfg)
    path = abs(cfg.feed_position_m - x_n)
    amp = np.sqrt(power_split(n, cfg.coupling_delta) * waveguide_loss(path, cfg.attenuation_db_per_m))
    return amp * np.exp(-2j * np.pi * path / lam_g)


def pa_xyz(x_n: float, cfg: SystemConfig) -> np.ndarray:
    return np.array([x_n, 0.0, cfg.pa_height_m])


def composite_gain(user_xy, layout, cfg: SystemConfig) -> complex:
    """H_k(x) for a single user; ``layout[i]`` is the position of PA ``i+1``."""
    lam, _ = wavelengths(cfg)
    user = np.array([user_xy[0], user_xy[1], 0.0])
    total = 0.0j
    for n, x_n in enumerate(layout, start=1):
        total += free_space_coeff(user, pa_xyz(x_n, cfg), lam) * waveguide_coeff(n, x_n, cfg)
    return complex(total)


def channel_gains(users_xy, layouts, cfg: SystemConfig) -> np.ndarray:
    """Vectorized composite gains.

    Args:
        users_xy: ``(K, 2)`` user coordinates.
        layouts: ``(N,)`` or ``(L, N)`` PA positions (column i is PA i+1).

    Returns:
        Complex array of shape ``(K,)`` or ``(L, K)``.
    """
    users = np.asarray(users_xy, dtype=float)
    x = np.asarray(layouts, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    lam, lam_g = wavelengths(cfg)
    n_idx = np.arange(1, x.shape[1] + 1)

    # (L, K, N)
    dx = users[None, :, 0, None] - x[:, None, :]
    dist = np.sqrt(dx * dx + users[None, :, 1, None] ** 2 + cfg.pa_height_m**2)
    free = lam / (4.0 * np.pi * dist) * np.exp(-2j * np.pi * dist / lam)

    path = np.abs(cfg.feed_position_m - x)  # (L, N)
    guide = np.sqrt(power_split(n_idx, cfg.coupling_delta) * waveguide_loss(path, cfg.attenuation_db_per_m))
    guide = guide * np.exp(-2j * np.pi * path / lam_g)

    gains = np.sum(free * guide[:, None, :], axis=-1)
    return gains[0] if single else gains


def _tol(cfg: SystemConfig) -> float:
    return 1e-12 * max(cfg.waveguide_length_m, 1.0)


def is_feasible_layout(positions, cfg: SystemConfig) -> bool:
    x = np.asarray(positions, dtype=float)
    tol = _tol(cfg)
    if x.shape != (cfg.num_pas,):
        return False
    if np.any(x < -tol) or np.any(x > cfg.waveguide_length_m + tol):
        return False
    return bool(np.all(np.diff(x) >= cfg.min_spacing_m - tol))


def project_layout(raw_positions, cfg: SystemConfig) -> np.ndarray:
    """Project arbitrary positions onto the feasible PA layouts.

    Sorts, pushes antennas right until the spacing holds, then pulls them
    back left from the far end of the waveguide. Feasible input is returned
    unchanged, and the map is idempotent.
    """
    x = np.sort(np.asarray(raw_positions, dtype=float))
    if x.shape != (cfg.num_pas,):
        raise ValueError(f"expected {cfg.num_pas} positions, got shape {x.shape}")
    length, d_min = cfg.waveguide_length_m, cfg.min_spacing_m
    if cfg.num_pas * d_min > length:
        raise ConfigError("num_pas * min_spacing_m exceeds the waveguide length")
    tol = _tol(cfg)
    x = np.clip(x, 0.0, length)
    for n in range(1, len(x)):
        if x[n] - x[n - 1] < d_min - tol:
            x[n] = x[n - 1] + d_min
    x[-1] = min(x[-1], length)
    for n in range(len(x) - 2, -1, -1):
        if x[n + 1] - x[n] < d_min - tol:
            x[n] = x[n + 1] - d_min
    x[0] = max(x[0], 0.0)
    return x
