import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pinchnoma.channel import (channel_gains, composite_gain, free_space_coeff, is_feasible_layout, power_split,
                               project_layout, waveguide_coeff, waveguide_loss, wavelengths)
from pinchnoma.config import ConfigError, SystemConfig

C = 299_792_458.0


def straight_line_gain(user_xy, layout, cfg):
    """Scalar re-derivation of the composite channel, written out term by term."""
    lam = C / cfg.carrier_frequency_hz
    lam_g = lam / cfg.effective_refractive_index
    d2 = cfg.coupling_delta ** 2
    total = 0j
    for i, xn in enumerate(layout):
        dist = math.sqrt((user_xy[0] - xn) ** 2 + user_xy[1] ** 2 + cfg.pa_height_m ** 2)
        free = lam / (4 * math.pi * dist) * cmath.exp(-1j * 2 * math.pi * dist / lam)
        path = abs(cfg.feed_position_m - xn)
        psi = d2 * (1 - d2) ** i
        loss = 10 ** (-cfg.attenuation_db_per_m * path / 10)
        total += free * math.sqrt(psi) * math.sqrt(loss) * cmath.exp(-1j * 2 * math.pi * path / lam_g)
    return total


def test_wavelength_28ghz():
    lam, lam_g = wavelengths(SystemConfig())
    assert lam == pytest.approx(0.0107068735, rel=1e-9)
    assert lam_g == pytest.approx(lam / 1.4)


def test_guided_wavelength_identity_and_halving():
    assert wavelengths(SystemConfig(effective_refractive_index=1.0))[1] == wavelengths(SystemConfig())[0]
    cfg = SystemConfig(carrier_frequency_hz=C / 0.01, effective_refractive_index=2.0)
    lam, lam_g = wavelengths(cfg)
    assert lam == pytest.approx(0.01)
    assert lam_g == pytest.approx(0.005)


def test_free_space_example():
    lam = 0.010707
    h = free_space_coeff([0, 0, 0], [0, 0, 3], lam)
    assert abs(h) == pytest.approx(2.841e-4, rel=1e-3)
    assert h / abs(h) == pytest.approx(cmath.exp(-1j * (2 * math.pi * 3 / lam % (2 * math.pi))), abs=1e-9)


def test_free_space_distance_laws():
    lam = 0.0107
    h1 = free_space_coeff([0, 0, 0], [0, 0, 2], lam)
    h2 = free_space_coeff([0, 0, 0], [0, 0, 4], lam)
    assert abs(h2) == pytest.approx(abs(h1) / 2)
    unit = free_space_coeff([0, 0, 0], [0, 0, lam / (4 * math.pi)], lam)
    assert abs(unit) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        free_space_coeff([1, 2, 3], [1, 2, 3], lam)


@given(st.floats(0.01, 500.0))
def test_free_space_scale_free_identity(d):
    lam = 0.0107
    assert abs(free_space_coeff([0, 0, 0], [d, 0, 0], lam)) * d == pytest.approx(lam / (4 * math.pi), rel=1e-12)


def test_waveguide_at_feed():
    cfg = SystemConfig()
    w = waveguide_coeff(1, 0.0, cfg)
    assert abs(w) == pytest.approx(cfg.coupling_delta, rel=1e-14)
    assert w.imag == 0.0


def test_waveguide_loss_and_split_values():
    assert waveguide_loss(10.0, 0.5) == pytest.approx(0.31623, rel=1e-4)
    assert np.allclose(power_split([1, 2, 3], math.sqrt(0.5)), [0.5, 0.25, 0.125])
    with pytest.raises(ValueError):
        waveguide_coeff(4, 1.0, SystemConfig())


@settings(max_examples=200)
@given(st.floats(1e-3, 1.0), st.integers(1, 16))
def test_power_split_sum(delta, n):
    total = float(np.sum(power_split(np.arange(1, n + 1), delta)))
    assert total == pytest.approx(1 - (1 - delta**2) ** n, abs=1e-12)
    assert total <= 1.0 + 1e-15


@given(st.floats(0, 60), st.floats(0, 60))
def test_waveguide_loss_monotone(a, b):
    la, lb = waveguide_loss(a, 0.5), waveguide_loss(b, 0.5)
    assert 0 < la <= 1 and 0 < lb <= 1
    if a <= b:
        assert la >= lb


def test_composite_single_antenna():
    cfg = SystemConfig(num_pas=1)
    lam, _ = wavelengths(cfg)
    h = free_space_coeff([12, 3, 0], [25, 0, 3], lam) * waveguide_coeff(1, 25, cfg)
    assert composite_gain([12, 3], [25.0], cfg) == pytest.approx(h, rel=1e-14)


def test_composite_matches_straight_line():
    cfg = SystemConfig(num_pas=2)
    ref = straight_line_gain((30, 5), (20.0, 40.0), cfg)
    assert composite_gain([30, 5], [20.0, 40.0], cfg) == pytest.approx(ref, rel=1e-10)
    assert channel_gains([[30, 5]], [20.0, 40.0], cfg)[0] == pytest.approx(ref, rel=1e-10)


def test_superposition_bounded_by_parts():
    cfg = SystemConfig(num_pas=2)
    lam, _ = wavelengths(cfg)
    parts = [abs(free_space_coeff([30, 5, 0], [x, 0, 3], lam) * waveguide_coeff(i + 1, x, cfg))
             for i, x in enumerate([20.0, 40.0])]
    # sliding the second PA by fractions of a wavelength changes the phase, not the parts
    mags = [abs(composite_gain([30, 5], [20.0, 40.0 + s], cfg)) for s in np.linspace(0, lam, 9)]
    assert max(mags) <= sum(parts) * (1 + 1e-6)
    assert min(mags) < 0.99 * max(mags)


def test_vectorized_matches_scalar_and_is_reproducible():
    cfg = SystemConfig()
    rng = np.random.default_rng(3)
    users = np.column_stack([rng.uniform(0, 60, 4), rng.uniform(-10, 10, 4)])
    layouts = np.sort(rng.uniform(0, 60, (5, 3)), axis=1)
    g = channel_gains(users, layouts, cfg)
    assert g.shape == (5, 4)
    for li, lay in enumerate(layouts):
        for k, u in enumerate(users):
            assert g[li, k] == pytest.approx(composite_gain(u, lay, cfg), rel=1e-10)
    assert np.array_equal(g, channel_gains(users, layouts, cfg))


@pytest.mark.parametrize("raw, expected", [
    ([0.5, 0.5, 0.5], [0.5, 0.6, 0.7]),
    ([10, 20, 30], [10, 20, 30]),
    ([59.95, 59.99, 60.0], [59.8, 59.9, 60.0]),
])
def test_project_layout_examples(raw, expected):
    cfg = SystemConfig(min_spacing_m=0.1)
    out = project_layout(raw, cfg)
    assert np.allclose(out, expected, atol=1e-12)
    assert is_feasible_layout(out, cfg)


def test_project_layout_identity_is_exact():
    cfg = SystemConfig(min_spacing_m=0.1)
    x = np.array([10.0, 20.0, 30.0])
    assert np.array_equal(project_layout(x, cfg), x)


@settings(max_examples=300)
@given(st.lists(st.floats(-20, 80), min_size=3, max_size=3), st.sampled_from([0.0054, 0.1, 5.0, 20.0]))
def test_project_layout_feasible_and_idempotent(raw, d_min):
    cfg = SystemConfig(min_spacing_m=d_min)
    once = project_layout(raw, cfg)
    assert is_feasible_layout(once, cfg)
    assert np.array_equal(project_layout(once, cfg), once)


def test_project_layout_infeasible_config():
    cfg = SystemConfig(min_spacing_m=0.1)
    object.__setattr__(cfg, "min_spacing_m", 30.0)
    with pytest.raises(ConfigError):
        project_layout([1, 2, 3], cfg)
