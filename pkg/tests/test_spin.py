import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from amorsim import spin
from amorsim.config import apply_overrides, paper_default, validate_config
from amorsim.core import ConfigError, DataError, NumericError


def _cfg(*overrides):
    return validate_config(apply_overrides(paper_default(), list(overrides)))


def _settled_trajectory(vcfg):
    k = spin.integration_substeps(vcfg)
    dt = 1.0 / (vcfg.fs * k)
    duration = (spin.TRANSIENT_LIFETIMES + 6.0) / vcfg.gamma_relax
    return spin.integrate_spin(vcfg, duration, dt, discard_transient=True)


def _steady_fundamental(vcfg):
    """Co-rotating fundamental of the transverse spin at the drive frequency."""
    traj = _settled_trajectory(vcfg)
    c = spin.demodulated_fundamental(
        traj, math.copysign(vcfg.raw.pump.mod_freq, vcfg.omega_l))
    return abs(c), math.atan2(c.imag, c.real)


def test_integration_substeps_default():
    assert spin.integration_substeps(_cfg()) == 6


def test_rwa_amplitude_on_resonance_frozen():
    sol = spin.rwa_steady_state(_cfg())
    # (R1/2)/Gamma with R1 = 2*R0/pi at 50% duty square drive
    assert sol.detuning == pytest.approx(0.0, abs=1e-6)
    assert sol.amplitude == pytest.approx(0.5 * (2.0 * 3.0e4 / math.pi)
                                          / 62832.0, rel=1e-14)
    assert sol.amplitude == pytest.approx(0.15198142006483514, rel=1e-12)
    assert sol.phase == pytest.approx(0.0, abs=1e-12)


def test_rwa_detuned_closed_form():
    v = _cfg("field.bias_Bz=0.81")
    delta = v.omega_m - abs(v.omega_l)
    sol = spin.rwa_steady_state(v)
    assert sol.detuning == pytest.approx(delta)
    assert sol.amplitude == pytest.approx(
        0.5 * v.drive_fundamental / math.hypot(v.gamma_relax, delta))
    assert sol.phase == pytest.approx(math.atan2(delta, v.gamma_relax))


def test_integrator_matches_rwa_on_resonance():
    v = _cfg()
    amp, _ = _steady_fundamental(v)
    assert amp == pytest.approx(spin.rwa_steady_state(v).amplitude, rel=2e-3)


def test_mirror_resonance_at_negative_bias():
    amp_pos, _ = _steady_fundamental(_cfg("field.bias_Bz=0.8"))
    amp_neg, _ = _steady_fundamental(_cfg("field.bias_Bz=-0.8"))
    assert amp_neg == pytest.approx(amp_pos, rel=1e-6)


@settings(max_examples=50)
@given(st.floats(min_value=-10.0, max_value=10.0))
def test_integrator_matches_rwa_across_detuning(delta_over_gamma):
    # narrow line (Gamma = Omega_m/100) where the closed form is accurate
    gamma_relax = 2.0 * math.pi * 5.8e3
    delta = delta_over_gamma * gamma_relax
    bias = (580.0e3 - delta / (2.0 * math.pi)) / 725.0e3
    v = _cfg(f"cell.relaxation_Gamma={gamma_relax!r}",
             f"field.bias_Bz={bias!r}")
    amp, _ = _steady_fundamental(v)
    assert amp == pytest.approx(spin.rwa_steady_state(v).amplitude, rel=0.02)


def test_single_quadrature_projection_folds_in_counter_rotating_sideband():
    # At Delta = 4*Gamma the Sy-only fundamental deviates from the closed
    # form by the counter-rotating fraction ~ sqrt(Gamma^2 + Delta^2) /
    # (2*Omega_m); the two-quadrature projection rejects it.
    gamma_relax = 2.0 * math.pi * 5.8e3
    delta = 4.0 * gamma_relax
    bias = (580.0e3 - delta / (2.0 * math.pi)) / 725.0e3
    v = _cfg(f"cell.relaxation_Gamma={gamma_relax!r}",
             f"field.bias_Bz={bias!r}")
    ref = spin.rwa_steady_state(v).amplitude
    traj = _settled_trajectory(v)

    amp_pair = abs(spin.demodulated_fundamental(traj, v.raw.pump.mod_freq))
    assert amp_pair == pytest.approx(ref, rel=2e-3)

    amp_sy, _ = spin.fundamental_component(traj.sy, 1.0 / traj.dt,
                                           v.raw.pump.mod_freq,
                                           t0=traj.start_time)
    rho = math.hypot(v.gamma_relax, delta) / math.hypot(
        v.gamma_relax, v.omega_m + abs(v.omega_l))
    assert 0.5 * rho < abs(amp_sy / ref - 1.0) < 1.5 * rho


def test_sine_drive_fundamental():
    v = _cfg("pump.waveform=\"sine\"")
    amp, _ = _steady_fundamental(v)
    assert amp == pytest.approx(0.5 * 0.5 * 3.0e4 / 62832.0, rel=2e-3)


def test_step_size_guard():
    v = _cfg()
    with pytest.raises(ConfigError):
        spin.integrate_spin(v, 1e-3, 1.0 / (10.0 * 580.0e3))
    # the same step is accepted when the check is explicitly disabled
    spin.integrate_spin(v, 1e-4, 1.0 / (10.0 * 580.0e3), check_step=False)


def test_transient_discard_requires_duration():
    v = _cfg()
    dt = 1.0 / (v.fs * spin.integration_substeps(v))
    with pytest.raises(ConfigError):
        spin.integrate_spin(v, 5.0 / v.gamma_relax, dt,
                            discard_transient=True)


def test_transient_discard_shifts_time_axis():
    v = _cfg()
    k = spin.integration_substeps(v)
    dt = 1.0 / (v.fs * k)
    duration = 12.0 / v.gamma_relax
    full = spin.integrate_spin(v, duration, dt, record_stride=k)
    cut = spin.integrate_spin(v, duration, dt, record_stride=k,
                              discard_transient=True)
    skip = math.ceil((spin.TRANSIENT_LIFETIMES / v.gamma_relax) / cut.dt)
    assert cut.start_time == pytest.approx(skip * cut.dt)
    assert cut.n == full.n - skip
    np.testing.assert_allclose(cut.samples, full.samples[skip:], rtol=1e-12)


def test_record_stride_subsamples():
    v = _cfg()
    k = spin.integration_substeps(v)
    dt = 1.0 / (v.fs * k)
    fine = spin.integrate_spin(v, 2e-4, dt)
    coarse = spin.integrate_spin(v, 2e-4, dt, record_stride=k)
    assert coarse.dt == pytest.approx(k * dt)
    np.testing.assert_allclose(coarse.samples, fine.samples[::k], rtol=1e-12)


def test_divergent_step_raises_numeric_error():
    v = _cfg()
    with pytest.raises(NumericError):
        spin.integrate_spin(v, 0.01, 1.0e-4, check_step=False)


def test_static_rotation_curve_shape():
    v = _cfg()
    b_half = v.gamma_relax / (2.0 * math.pi * v.raw.field.gamma)
    assert b_half == pytest.approx(0.01379313570255168, rel=1e-12)
    b = np.linspace(-5.0 * b_half, 5.0 * b_half, 1001)
    phi = spin.static_rotation_curve(v, b)
    np.testing.assert_allclose(phi, -phi[::-1], atol=1e-18)  # odd in B
    assert b[np.argmax(phi)] == pytest.approx(b_half, abs=b[1] - b[0])
    assert b[np.argmin(phi)] == pytest.approx(-b_half, abs=b[1] - b[0])
    # peak value kappa*R0/(2*Gamma)
    pr = v.raw.probe
    assert phi.max() == pytest.approx(
        pr.coupling_kappa * 3.0e4 / (2.0 * v.gamma_relax), rel=1e-4)


def test_pump_rate_waveform_values():
    cfg = paper_default()
    t = np.array([0.0, 0.4, 0.5, 0.9]) / 580.0e3
    np.testing.assert_allclose(
        spin.pump_rate_waveform(t, cfg.pump), [3.0e4, 3.0e4, 0.0, 0.0])
    sine = apply_overrides(cfg, ["pump.waveform=\"sine\""]).pump
    np.testing.assert_allclose(
        spin.pump_rate_waveform(np.array([0.0]), sine), [3.0e4])


def test_fundamental_component_recovers_tone():
    fs, f0, a0, p0 = 2.0e5, 1.25e3, 0.37, 1.1
    t = np.arange(4096) / fs
    x = a0 * np.cos(2.0 * np.pi * f0 * t + p0) + 0.05
    amp, phase = spin.fundamental_component(x, fs, f0)
    assert amp == pytest.approx(a0, rel=1e-6)
    assert phase == pytest.approx(p0, abs=1e-6)
    # the time origin offset is honored
    amp2, phase2 = spin.fundamental_component(x[100:], fs, f0, t0=t[100])
    assert amp2 == pytest.approx(a0, rel=1e-6)
    assert phase2 == pytest.approx(p0, abs=1e-6)


def test_fundamental_component_needs_one_period():
    with pytest.raises(DataError):
        spin.fundamental_component(np.zeros(10), 1.0e3, 10.0)


def test_write_trajectory_roundtrip(tmp_path):
    v = _cfg()
    k = spin.integration_substeps(v)
    traj = spin.integrate_spin(v, 4e-5, 1.0 / (v.fs * k), record_stride=k)
    path = tmp_path / "traj.txt"
    spin.write_trajectory(traj, path, header={"note": "smoke"})
    data = np.loadtxt(path)
    np.testing.assert_allclose(data[:, 0], traj.times, rtol=1e-15)
    np.testing.assert_allclose(data[:, 1:], traj.samples, rtol=1e-15)
    assert "# note: smoke" in path.read_text()
