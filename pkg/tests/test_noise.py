import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from amorsim import core, dsp, noise
from amorsim.config import apply_overrides, paper_default, validate_config
from amorsim.core import DataError


def _cfg(*overrides):
    return validate_config(apply_overrides(paper_default(), list(overrides)))


def test_loss_propagation_frozen_point():
    # -1.9 dB squeezing through 90% transmission
    v_in = 10.0 ** (-1.9 / 10.0)
    v_out = noise.loss_propagated_variance(v_in, 0.90)
    assert v_out == pytest.approx(0.9 * v_in + 0.1, rel=1e-15)
    assert core.variance_to_db(v_out) == pytest.approx(-1.6679625739967667,
                                                       rel=1e-12)


def test_loss_propagation_rejects_bad_transmission():
    with pytest.raises(ValueError):
        noise.loss_propagated_variance(0.5, 1.1)
    with pytest.raises(ValueError):
        noise.loss_propagated_variance(0.5, -0.1)


@given(st.floats(min_value=0.01, max_value=100.0),
       st.floats(min_value=0.0, max_value=1.0))
def test_loss_pulls_variance_toward_vacuum(v, eta):
    out = noise.loss_propagated_variance(v, eta)
    assert min(v, 1.0) - 1e-12 <= out <= max(v, 1.0) + 1e-12
    # full transmission is the identity, full loss is vacuum
    assert noise.loss_propagated_variance(v, 1.0) == v
    assert noise.loss_propagated_variance(v, 0.0) == 1.0


@given(st.floats(min_value=0.01, max_value=1.0),
       st.floats(min_value=0.01, max_value=0.99))
def test_loss_degrades_squeezing_monotonically(v, eta):
    # squeezed input: less transmission means less squeezing survives
    out = noise.loss_propagated_variance(v, eta)
    better = noise.loss_propagated_variance(v, min(1.0, eta + 0.01))
    assert out >= better - 1e-15


def test_quadrature_variance_angles():
    vs, va = 0.5, 2.0
    assert noise.quadrature_variance(0.0, vs, va) == vs
    assert noise.quadrature_variance(math.pi / 2.0, vs, va) == pytest.approx(va)
    assert noise.quadrature_variance(math.pi / 4.0, vs, va) == pytest.approx(
        0.5 * (vs + va))
    assert noise.quadrature_variance(math.pi, vs, va) == pytest.approx(vs)


@given(st.floats(min_value=-10.0, max_value=10.0))
def test_quadrature_variance_bounded(theta):
    v = noise.quadrature_variance(theta, 0.5, 2.0)
    assert 0.5 - 1e-12 <= v <= 2.0 + 1e-12


def test_excess_coefficient_solved_from_convergence_condition():
    # independent route: floors must close to 0.2 dB at the 70 degC density
    v_loss = 0.9 * 10.0 ** (-0.19) + 0.1
    target = 10.0 ** (-0.02)
    e70 = (target - v_loss) / (1.0 - target)
    n70 = core.rb_number_density(70.0)
    coeff = e70 / (n70 / core.DENSITY_ANCHOR_CM3) ** 2
    assert noise.EXCESS_COEFF == pytest.approx(coeff, rel=1e-12)
    assert noise.EXCESS_COEFF == pytest.approx(0.042841377071400163, rel=1e-12)
    # and the functional form reproduces the condition
    gap = core.variance_to_db(
        (1.0 + noise.excess_atomic_noise_variance(n70))
        / (v_loss + noise.excess_atomic_noise_variance(n70)))
    assert gap == pytest.approx(0.2, abs=1e-9)


def test_excess_noise_grows_quadratically():
    e1 = noise.excess_atomic_noise_variance(core.DENSITY_ANCHOR_CM3)
    e2 = noise.excess_atomic_noise_variance(2.0 * core.DENSITY_ANCHOR_CM3)
    assert e2 == pytest.approx(4.0 * e1, rel=1e-12)
    with pytest.raises(ValueError):
        noise.excess_atomic_noise_variance(0.0)


def test_noise_model_factors_at_default_point():
    v = _cfg()
    coh = noise.build_noise_model(v, squeezed=False)
    sq = noise.build_noise_model(v, squeezed=True)
    assert coh.squeeze_variance_factor == 1.0
    assert sq.squeeze_variance_factor == pytest.approx(0.6810888061311899,
                                                       rel=1e-12)
    assert coh.excess_variance_factor == pytest.approx(0.042841377071400163,
                                                       rel=1e-12)
    assert coh.white_variance_factor == pytest.approx(1.0428413770714002,
                                                      rel=1e-12)
    assert sq.white_variance_factor == pytest.approx(0.7239301832025901,
                                                     rel=1e-12)
    # designed analyzer floor gap at the default density
    gap = core.variance_to_db(coh.white_variance_factor
                              / sq.white_variance_factor)
    assert gap == pytest.approx(1.5852157017150923, rel=1e-9)


def test_noise_model_disabled_squeezing_is_coherent():
    v = _cfg("squeeze.enabled=false")
    m = noise.build_noise_model(v, squeezed=True)
    assert m.squeeze_variance_factor == 1.0


def test_noise_model_antisqueezed_quadrature():
    v = _cfg(f"squeeze.quadrature_angle={math.pi / 2.0!r}")
    m = noise.build_noise_model(v, squeezed=True)
    expect = noise.loss_propagated_variance(10.0 ** 0.8, 0.9)
    assert m.squeeze_variance_factor == pytest.approx(expect, rel=1e-12)
    assert m.squeeze_variance_factor > 1.0


def test_flicker_level_crosses_shot_floor_at_10_hz():
    v = _cfg()
    m = noise.build_noise_model(v, squeezed=False)
    assert m.flicker_corner == 100.0
    assert m.flicker_asd_at_corner == pytest.approx(
        v.shot_asd_rad * math.sqrt(0.1), rel=1e-12)
    # PSD(10 Hz) = asd_corner^2 * (100/10) = shot^2
    psd_10 = m.flicker_asd_at_corner ** 2 * (100.0 / 10.0)
    assert psd_10 == pytest.approx(v.shot_asd_rad ** 2, rel=1e-12)


def test_flicker_series_psd_follows_one_over_f():
    fs, n = 10.0e3, 1 << 17
    a_corner = 2.0e-3
    rng = noise.make_rng(1234)
    x = noise.flicker_series(n, fs, a_corner, 100.0, rng)
    spec = dsp.psd_estimate(x, fs, fs / 4096.0, averages=32)
    for f_lo, f_hi in ((15.0, 45.0), (200.0, 800.0)):
        band = spec.in_band(f_lo, f_hi)
        expect = a_corner ** 2 * np.mean(100.0 / band.freqs)
        assert np.mean(band.values) == pytest.approx(expect, rel=0.15)


def test_flicker_series_needs_two_samples():
    with pytest.raises(DataError):
        noise.flicker_series(1, 1.0e3, 1e-3, 100.0, noise.make_rng(0))


def test_synthesis_is_seed_deterministic():
    v = _cfg()
    m = noise.build_noise_model(v, squeezed=True)
    a = noise.synthesize_probe_noise(m, 4096, v.fs, [7, 11],
                                     carrier_freq=580.0e3)
    b = noise.synthesize_probe_noise(m, 4096, v.fs, [7, 11],
                                     carrier_freq=580.0e3)
    c = noise.synthesize_probe_noise(m, 4096, v.fs, [7, 12],
                                     carrier_freq=580.0e3)
    assert a.samples.tobytes() == b.samples.tobytes()
    assert a.samples.tobytes() != c.samples.tobytes()


def test_synthesis_white_level_and_breakdown():
    v = _cfg()
    m = noise.build_noise_model(v, squeezed=False)
    n = 1 << 16
    series = noise.synthesize_probe_noise(m, n, v.fs, 42, carrier_freq=580.0e3)
    bd = series.component_breakdown
    assert bd["white_variance"] == pytest.approx(
        m.white_asd ** 2 * v.fs / 2.0, rel=1e-12)
    assert bd["white_rel_shot_db"] == pytest.approx(
        core.variance_to_db(m.white_variance_factor), rel=1e-9)
    total = bd["white_variance"] + bd["flicker_variance"]
    assert float(np.var(series.samples)) == pytest.approx(total, rel=0.05)


def test_synthesis_squeezed_floor_sits_below_coherent():
    v = _cfg()
    n = 1 << 16
    floors = {}
    for state, squeezed in (("coherent", False), ("squeezed", True)):
        m = noise.build_noise_model(v, squeezed)
        s = noise.synthesize_probe_noise(m, n, v.fs, 5, carrier_freq=580.0e3)
        spec = dsp.sa_trace(s.samples, v.fs, 1000.0, 100.0,
                            center=580.0e3, span=100.0e3)
        floors[state], _ = dsp.noise_floor_estimate(spec, 3.0e3)
    gap_db = 10.0 * math.log10(floors["coherent"] / floors["squeezed"])
    assert gap_db == pytest.approx(1.585, abs=0.4)


def test_baseband_flicker_path():
    v = _cfg()
    m = noise.build_noise_model(v, squeezed=False)
    series = noise.synthesize_probe_noise(m, 4096, v.fs, 9, carrier_freq=0.0)
    assert series.component_breakdown["flicker_variance"] > 0.0
    assert np.isfinite(series.samples).all()
