"""Field sensitivity: discrimination slope, frequency response, noise floor.

The magnetometer output S is the in-phase lock-in channel at the optimum
reference phase. Sensitivity follows from

    delta_B_min(f) = sigma_S(f) / |dS/dB|(f)

with sigma_S the output noise ASD and dS/dB the small-signal response,
measured by injecting a field tone and fitted to a two-pole magnitude model
(atomic linewidth pole and lock-in filter pole). The quoted plateau is the
median of delta_B_min over a declared quantum-limited band.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from . import dsp, spin
from .config import ValidatedConfig, validate_config
from .core import ConfigError, DataError, GAUSS_TO_PT

PLATEAU_BAND_HZ = (200.0, 500.0)
RESPONSE_FREQS_HZ = (30.0, 50.0, 80.0, 130.0, 210.0, 340.0, 550.0,
                     900.0, 1500.0, 2400.0, 4000.0, 6500.0)
# injection default, as a fraction of the resonance half-width Gamma/(2 pi gamma)
INJECTION_LINEWIDTH_FRACTION = 0.004
LINEARITY_TOL = 0.02

_SETTLE_WINDOW_S = 2.0e-3     # averaging window for steady lock-in readings


@dataclass(frozen=True)
class DiscriminationCurve:
    b_grid: np.ndarray
    x_values: np.ndarray      # V, at the optimized reference phase
    y_values: np.ndarray
    zero_crossing: float      # G
    slope_at_crossing: float  # V/G
    phase: float              # rad, reference phase used


@dataclass(frozen=True)
class ResponseSpectrum:
    freqs: np.ndarray
    response: np.ndarray      # V/G
    dc_response: float        # fitted H0, V/G
    atomic_pole: float        # Hz
    lockin_pole: float        # Hz
    fit_residual: float       # rms relative residual


@dataclass(frozen=True)
class SensitivityReport:
    freqs: np.ndarray
    delta_b: np.ndarray       # G/sqrt(Hz)
    plateau: float            # G/sqrt(Hz), median over band
    band: tuple[float, float]
    improvement_percent: float | None = None

    @property
    def delta_b_pt(self) -> np.ndarray:
        return self.delta_b * GAUSS_TO_PT

    @property
    def plateau_pt(self) -> float:
        return self.plateau * GAUSS_TO_PT


def with_bias(cfg: ValidatedConfig, bias: float,
              inj_amp: float = 0.0, inj_freq=None) -> ValidatedConfig:
    """Revalidated copy of cfg with the bias field (and optional field-tone
    injection) replaced."""
    fld = dataclasses.replace(cfg.raw.field, bias_Bz=bias,
                              injection_amplitude=inj_amp,
                              injection_freq=inj_freq)
    return validate_config(dataclasses.replace(cfg.raw, field=fld))


def steady_lockin_point(cfg: ValidatedConfig,
                        phase: float = 0.0) -> tuple[float, float]:
    """Settled lock-in reading at the configured bias (noiseless)."""
    det = cfg.raw.detection
    k = spin.integration_substeps(cfg)
    dt = 1.0 / (cfg.fs * k)
    duration = (spin.TRANSIENT_LIFETIMES / cfg.gamma_relax
                + dsp.SETTLE_TIME_CONSTANTS * det.lockin_time_constant
                + _SETTLE_WINDOW_S)
    traj = spin.integrate_spin(cfg, duration, dt, record_stride=k)
    phi = spin.rotation_timeseries(traj, cfg.raw.probe)
    series = dsp.assemble_detector_output(phi, cfg.fs, None,
                                          cfg.raw.probe.detector_gain)
    out = dsp.lockin_demodulate(series, cfg.raw.pump.mod_freq, phase,
                                det.lockin_time_constant,
                                det.lockin_filter_order)
    n_avg = max(1, int(round(_SETTLE_WINDOW_S * out.sample_rate)))
    return float(np.mean(out.x[-n_avg:])), float(np.mean(out.y[-n_avg:]))


def discrimination_sweep(cfg: ValidatedConfig, b_range: tuple[float, float],
                         n_points: int) -> DiscriminationCurve:
    """Lock-in X vs bias field across the resonance, phased for maximum
    discrimination slope; noiseless."""
    if n_points < 5:
        raise ConfigError([("discrimination", "need at least 5 sweep points")])
    b_grid = np.linspace(b_range[0], b_range[1], n_points)
    x0 = np.empty(n_points)
    y0 = np.empty(n_points)
    for i, b in enumerate(b_grid):
        x0[i], y0[i] = steady_lockin_point(with_bias(cfg, float(b)))
    phase = dsp.auto_phase(b_grid, x0, y0)
    x, y = dsp.rotate_xy(x0, y0, phase)
    hit = dsp._crossing_slope(b_grid, x)
    if hit is None:
        raise DataError("discrimination sweep has no zero crossing after "
                        "phasing; widen the field range")
    b_cross = hit[0]
    i0 = int(np.argmin(np.abs(b_grid - b_cross)))
    i0 = min(max(i0, 1), n_points - 2)
    slope = (x[i0 + 1] - x[i0 - 1]) / (b_grid[i0 + 1] - b_grid[i0 - 1])
    return DiscriminationCurve(b_grid=b_grid, x_values=x, y_values=y,
                               zero_crossing=b_cross,
                               slope_at_crossing=float(slope), phase=phase)


def analytic_slope(cfg: ValidatedConfig) -> float:
    """Closed-form discrimination slope at resonance:
    kappa * gain * 2 pi gamma * (R1/2) / Gamma^2, in V/G."""
    pr = cfg.raw.probe
    return (pr.coupling_kappa * pr.detector_gain
            * 2.0 * math.pi * cfg.raw.field.gamma
            * 0.5 * cfg.drive_fundamental / cfg.gamma_relax**2)


def default_injection_amplitude(cfg: ValidatedConfig) -> float:
    half_width_g = cfg.gamma_relax / (2.0 * math.pi * cfg.raw.field.gamma)
    return INJECTION_LINEWIDTH_FRACTION * half_width_g


def _injected_tone(cfg: ValidatedConfig, freq: float, amp: float,
                   phase: float) -> float:
    """Amplitude of the lock-in X tone at `freq` for field injection `amp`."""
    det = cfg.raw.detection
    run = with_bias(cfg, cfg.raw.field.bias_Bz, inj_amp=amp, inj_freq=freq)
    k = spin.integration_substeps(run)
    dt = 1.0 / (run.fs * k)
    settle = (spin.TRANSIENT_LIFETIMES / run.gamma_relax
              + dsp.SETTLE_TIME_CONSTANTS * det.lockin_time_constant)
    window = max(6.0 / freq, 0.04)
    duration = settle + window
    traj = spin.integrate_spin(run, duration, dt, record_stride=k)
    phi = spin.rotation_timeseries(traj, run.raw.probe)
    series = dsp.assemble_detector_output(phi, run.fs, None,
                                          run.raw.probe.detector_gain)
    dec = max(1, int(run.fs // 20000))
    out = dsp.lockin_demodulate(series, run.raw.pump.mod_freq, phase,
                                det.lockin_time_constant,
                                det.lockin_filter_order, decimate=dec)
    out = out.settled()
    amp_x, _ = spin.fundamental_component(out.x, out.sample_rate, freq)
    return amp_x


def response_model(freqs, dc_response: float, atomic_pole: float,
                   lockin_pole: float) -> np.ndarray:
    f = np.asarray(freqs, dtype=float)
    return dc_response / np.sqrt((1.0 + (f / atomic_pole) ** 2)
                                 * (1.0 + (f / lockin_pole) ** 2))


def fit_response(freqs, response, gamma_relax: float,
                 time_constant: float) -> tuple[float, float, float, float]:
    """Fit the two-pole magnitude model; returns (H0, f_atomic, f_lockin,
    rms relative residual)."""
    f = np.asarray(freqs, dtype=float)
    r = np.asarray(response, dtype=float)
    if f.shape != r.shape or f.size < 4:
        raise DataError("need at least 4 response points to fit")
    if np.any(r <= 0):
        raise DataError("response amplitudes must be positive")
    p0 = np.log([r[0], gamma_relax / (2.0 * math.pi),
                 1.0 / (2.0 * math.pi * time_constant)])

    def resid(logp):
        return np.log(response_model(f, *np.exp(logp))) - np.log(r)

    sol = least_squares(resid, p0, method="lm", max_nfev=2000)
    h0, fa, fp = np.exp(sol.x)
    model = response_model(f, h0, fa, fp)
    residual = float(np.sqrt(np.mean(((r - model) / model) ** 2)))
    return float(h0), float(fa), float(fp), residual


def response_spectrum(cfg: ValidatedConfig, freqs=RESPONSE_FREQS_HZ,
                      injection_amplitude: float | None = None,
                      phase: float | None = None) -> ResponseSpectrum:
    """Small-signal response |dS/dB|(f) by tone injection at the operating
    point (config bias at the discrimination zero crossing).

    Verifies linearity at the lowest frequency by halving the injection; a
    mismatch beyond LINEARITY_TOL is a configuration error suggesting a
    smaller amplitude.
    """
    freqs = np.asarray(sorted(freqs), dtype=float)
    if freqs.size == 0 or freqs[0] <= 0:
        raise ConfigError([("response", "injection frequencies must be > 0")])
    amp = (default_injection_amplitude(cfg) if injection_amplitude is None
           else float(injection_amplitude))
    if amp <= 0:
        raise ConfigError([("response", "injection amplitude must be > 0")])
    if phase is None:
        phase = cfg.raw.detection.lockin_phase

    a_full = _injected_tone(cfg, float(freqs[0]), amp, phase)
    a_half = _injected_tone(cfg, float(freqs[0]), 0.5 * amp, phase)
    if a_full <= 0 or a_half <= 0:
        raise DataError("no injected tone detected in the lock-in output")
    mismatch = abs((a_full / amp) / (a_half / (0.5 * amp)) - 1.0)
    if mismatch > LINEARITY_TOL:
        raise ConfigError([
            ("response",
             f"response nonlinear at injection amplitude {amp:g} G "
             f"({100 * mismatch:.1f}% change when halved); "
             "use a smaller injection_amplitude")])

    resp = np.empty(freqs.size)
    resp[0] = a_full / amp
    for i in range(1, freqs.size):
        resp[i] = _injected_tone(cfg, float(freqs[i]), amp, phase) / amp
    det = cfg.raw.detection
    h0, fa, fp, residual = fit_response(freqs, resp, cfg.gamma_relax,
                                        det.lockin_time_constant)
    return ResponseSpectrum(freqs=freqs, response=resp, dc_response=h0,
                            atomic_pole=fa, lockin_pole=fp,
                            fit_residual=residual)


def sensitivity_spectrum(noise_spec: dsp.Spectrum, response: ResponseSpectrum,
                         band: tuple[float, float] = PLATEAU_BAND_HZ
                         ) -> SensitivityReport:
    """delta_B_min(f) = sigma_S(f) / |dS/dB|(f), response interpolated via its
    fitted model; plateau is the band median."""
    asd = noise_spec.to_asd()
    m = asd.freqs > 0
    freqs = asd.freqs[m]
    resp = response_model(freqs, response.dc_response, response.atomic_pole,
                          response.lockin_pole)
    delta_b = asd.values[m] / resp
    in_band = (freqs >= band[0]) & (freqs <= band[1])
    if not in_band.any():
        raise DataError(f"no noise bins inside the plateau band {band}")
    plateau = float(np.median(delta_b[in_band]))
    return SensitivityReport(freqs=freqs, delta_b=delta_b, plateau=plateau,
                             band=band)


def improvement_percent(coherent: SensitivityReport,
                        squeezed: SensitivityReport) -> float:
    """Sensitivity gain from squeezing: 100 * (1 - plateau_sq/plateau_coh)."""
    if coherent.band != squeezed.band:
        raise DataError(f"plateau bands differ: {coherent.band} vs "
                        f"{squeezed.band}")
    return 100.0 * (1.0 - squeezed.plateau / coherent.plateau)
