"""Uplink NOMA with SIC, the TDMA-style OMA benchmark, and energy efficiency."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class RateReport:
    order: np.ndarray  # 0-based user indices, strongest first
    per_user_rate_bpshz: np.ndarray  # indexed by original user index
    sum_rate_bpshz: float
    ee_bpshz_per_w: float = float("nan")


def sic_order(gains) -> np.ndarray:
    """User indices sorted by |H|^2 descending; ties keep the lower index first."""
    g2 = np.abs(np.asarray(gains)) ** 2
    if g2.size == 0:
        raise ValueError("sic_order needs at least one user")
    return np.argsort(-g2, kind="stable")


def _check(powers, sigma2, beta):
    p = np.asarray(powers, dtype=float)
    if np.any(p < 0):
        raise ValueError("transmit powers must be non-negative")
    if sigma2 <= 0:
        raise ValueError("noise power must be positive")
    if not 0.0 <= beta <= 1.0:
        raise ValueError("time-switching ratio must lie in [0, 1]")
    return p


def noma_rates(powers_w, gains, sigma2_w: float, beta: float) -> RateReport:
    """Per-user uplink rates under SIC decoding in descending-gain order.

    The user decoded k-th sees interference only from users decoded after it.
    """
    p = _check(powers_w, sigma2_w, beta)
    g2 = np.abs(np.asarray(gains)) ** 2
    order = sic_order(gains)
    rx = (p * g2)[order]
    # interference from users later in the order
    tail = np.concatenate([np.cumsum(rx[::-1])[::-1][1:], [0.0]])
    rates_sorted = (1.0 - beta) * np.log2(1.0 + rx / (tail + sigma2_w))
    rates = np.empty_like(rates_sorted)
    rates[order] = rates_sorted
    return RateReport(order=order, per_user_rate_bpshz=rates, sum_rate_bpshz=float(np.sum(rates)))


def oma_rates(powers_w, gains, sigma2_w: float, beta: float, num_users: int | None = None) -> RateReport:
    """Each user transmits alone for 1/K of the uplink phase."""
    p = _check(powers_w, sigma2_w, beta)
    k = len(p) if num_users is None else num_users
    g2 = np.abs(np.asarray(gains)) ** 2
    rates = (1.0 - beta) / k * np.log2(1.0 + p * g2 / sigma2_w)
    return RateReport(order=sic_order(gains), per_user_rate_bpshz=rates, sum_rate_bpshz=float(np.sum(rates)))


def ee_value(report: RateReport | float, powers_w, fixed_power_w: float) -> float:
    """Sum rate per watt of total (circuit + transmit) power."""
    if fixed_power_w <= 0:
        raise ValueError("fixed circuit power must be positive")
    rate = report.sum_rate_bpshz if isinstance(report, RateReport) else float(report)
    return rate / (fixed_power_w + float(np.sum(powers_w)))


def noma_sum_rates_batch(rx_snr, beta):
    """Vectorized per-user NOMA rates for many candidates at once.

    ``rx_snr`` has shape ``(..., K)`` holding ``p_k |H_k|^2 / sigma^2`` in
    SIC order (strongest first); ``beta`` broadcasts against ``(...)``.
    Returns rates with the same shape.
    """
    tail = np.cumsum(rx_snr[..., ::-1], axis=-1)[..., ::-1]
    interference = np.concatenate([tail[..., 1:], np.zeros_like(tail[..., :1])], axis=-1)
    return (1.0 - np.asarray(beta)[..., None]) * np.log2(1.0 + rx_snr / (interference + 1.0))
