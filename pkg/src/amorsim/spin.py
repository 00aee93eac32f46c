"""Spin dynamics of the stroboscopically pumped vapor.

The ground-state orientation S obeys

    dS/dt = Omega_L (z x S) - Gamma S + R(t) x_hat

with the pump rate R(t) modulated at Omega_m. Near Omega_m = |Omega_L| the
transverse spin locks to the drive; the rotating-wave steady state

    amplitude = (R1/2) / sqrt(Gamma^2 + Delta^2),  phase = atan2(Delta, Gamma)

(R1 = drive fundamental, Delta = Omega_m - |Omega_L|) serves as the closed
form the numeric integrator is checked against. The probe reads the rotation
angle phi(t) = kappa * Sy(t).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .config import ValidatedConfig
from .core import ConfigError, DataError, NumericError

STEP_FACTOR = 20          # precondition: dt <= 1/(STEP_FACTOR * fastest freq)
TRANSIENT_LIFETIMES = 10.0

_WAVEFORM_CODE = {"square": kernels.WAVEFORM_SQUARE, "sine": kernels.WAVEFORM_SINE}


@dataclass(frozen=True)
class SpinState:
    sx: float = 0.0
    sy: float = 0.0
    sz: float = 0.0


@dataclass(frozen=True)
class SpinTrajectory:
    """Uniformly sampled spin components; samples[i] is the state at
    start_time + i*dt."""

    dt: float
    samples: np.ndarray      # (n, 3)
    start_time: float = 0.0

    @property
    def n(self) -> int:
        return self.samples.shape[0]

    @property
    def times(self) -> np.ndarray:
        return self.start_time + self.dt * np.arange(self.n)

    @property
    def sy(self) -> np.ndarray:
        return self.samples[:, 1]

    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.samples, axis=1)


@dataclass(frozen=True)
class RwaSolution:
    amplitude: float
    phase: float          # rad, in (-pi, pi]
    detuning: float       # rad/s, Omega_m - |Omega_L|


def pump_rate_waveform(t, pump) -> np.ndarray:
    """Pump rate R(t) in 1/s for times in seconds (square or sine modulation)."""
    code = _WAVEFORM_CODE[pump.waveform]
    return kernels.pump_rate_array(np.asarray(t, dtype=float),
                                   pump.peak_rate_R0, pump.mod_freq,
                                   pump.duty, code)


def max_drive_frequency(cfg: ValidatedConfig) -> float:
    return max(cfg.raw.pump.mod_freq, cfg.larmor_hz)


def integration_substeps(cfg: ValidatedConfig, factor: float = 24.0) -> int:
    """Integrator substeps per detection sample so the RK4 step resolves the
    fastest of the modulation and Larmor periods with margin."""
    return max(1, math.ceil(factor * max_drive_frequency(cfg) / cfg.fs))


def integrate_spin(cfg: ValidatedConfig, duration: float, dt: float, *,
                   s0: SpinState = SpinState(), start_time: float = 0.0,
                   record_stride: int = 1, discard_transient: bool = False,
                   check_step: bool = True) -> SpinTrajectory:
    """Fixed-step RK4 integration of the driven Bloch equations.

    dt must resolve the fastest drive period (dt <= 1/(20 f_max)); violating
    it is a configuration error unless check_step is disabled (used by the
    self-test suite to demonstrate the failure mode). With discard_transient
    the first 10/Gamma of the trajectory is dropped, so duration must exceed
    that; the recorded step is record_stride*dt.
    """
    if duration <= 0 or dt <= 0:
        raise ConfigError([("integrate_spin", "duration and dt must be > 0")])
    f_max = max_drive_frequency(cfg)
    if check_step and dt * STEP_FACTOR * f_max > 1.0 + 1e-9:
        raise ConfigError([
            ("integrate_spin",
             f"step {dt:.3e} s too coarse: need dt <= 1/({STEP_FACTOR} x "
             f"{f_max:g} Hz) = {1.0 / (STEP_FACTOR * f_max):.3e} s")])
    gamma = cfg.gamma_relax
    transient = TRANSIENT_LIFETIMES / gamma
    if discard_transient and duration <= transient:
        raise ConfigError([
            ("integrate_spin",
             f"duration {duration:g} s must exceed the {transient:g} s "
             f"transient (10/Gamma) to reach steady state")])

    n_steps = math.ceil(duration / dt - 1e-9)
    n_steps = ((n_steps + record_stride - 1) // record_stride) * record_stride
    fld, pump = cfg.raw.field, cfg.raw.pump
    inj_amp = 2.0 * math.pi * fld.gamma * fld.injection_amplitude
    inj_freq = fld.injection_freq if inj_amp > 0 else 0.0
    samples = kernels.bloch_rk4(
        (s0.sx, s0.sy, s0.sz), n_steps, dt, start_time,
        cfg.omega_l, gamma, pump.peak_rate_R0, pump.mod_freq, pump.duty,
        _WAVEFORM_CODE[pump.waveform],
        inj_amp=inj_amp, inj_freq=inj_freq or 0.0, stride=record_stride)

    bad = ~np.isfinite(samples).all(axis=1)
    if bad.any():
        idx = int(np.argmax(bad)) * record_stride
        raise NumericError(f"non-finite spin state at integration step {idx} "
                           f"(t = {start_time + idx * dt:.6e} s)")

    traj = SpinTrajectory(dt=dt * record_stride, samples=samples,
                          start_time=start_time)
    if discard_transient:
        skip = math.ceil(transient / traj.dt)
        if skip >= traj.n:
            raise DataError("no samples left after transient discard")
        traj = SpinTrajectory(dt=traj.dt, samples=traj.samples[skip:],
                              start_time=traj.start_time + skip * traj.dt)
    return traj


def rwa_steady_state(cfg: ValidatedConfig) -> RwaSolution:
    """Closed-form driven steady state near resonance (valid for
    Gamma << Omega_m and |detuning| << Omega_m)."""
    gamma = cfg.gamma_relax
    delta = cfg.omega_m - abs(cfg.omega_l)
    amplitude = 0.5 * cfg.drive_fundamental / math.hypot(gamma, delta)
    phase = math.atan2(delta, gamma)
    return RwaSolution(amplitude=amplitude, phase=phase, detuning=delta)


def static_rotation_curve(cfg: ValidatedConfig, b_values) -> np.ndarray:
    """DC rotation angle vs field for an unmodulated pump of rate R0:
    phi(B) = kappa * R0 * Omega_L / (Gamma^2 + Omega_L^2).

    Odd in B with extrema at Omega_L = +-Gamma, i.e. B = Gamma/(2 pi gamma).
    """
    b = np.asarray(b_values, dtype=float)
    omega_l = 2.0 * math.pi * cfg.raw.field.gamma * b
    gamma = cfg.gamma_relax
    sy_dc = cfg.raw.pump.peak_rate_R0 * omega_l / (gamma**2 + omega_l**2)
    return cfg.raw.probe.coupling_kappa * sy_dc


def rotation_timeseries(traj: SpinTrajectory, probe) -> np.ndarray:
    """Polarization rotation phi(t) = kappa * Sy(t) in rad."""
    return probe.coupling_kappa * traj.sy


def demodulated_fundamental(traj: SpinTrajectory, freq: float) -> complex:
    """Co-rotating complex fundamental of the transverse spin at freq.

    Projects Sx + i*Sy onto exp(i 2 pi freq t) over the largest whole number
    of periods that fits, taken from the end of the trajectory. Projecting a
    single quadrature (Sy alone) would fold in the counter-rotating sideband,
    a relative contamination of order sqrt(Gamma^2 + Delta^2)/(2 Omega_m)
    that grows with detuning; the two-quadrature projection rejects it, so
    the magnitude converges to the rotating-wave amplitude across the whole
    line. Pass freq with the sign of Omega_L to follow the precession sense.
    """
    n = traj.n
    periods = math.floor((n - 1) * abs(freq) * traj.dt)
    if periods < 1:
        raise DataError(
            f"trajectory too short to hold one period of {freq:g} Hz")
    n_use = int(round(periods / (abs(freq) * traj.dt)))
    t = traj.start_time + np.arange(n - n_use, n) * traj.dt
    z = traj.samples[n - n_use:, 0] + 1j * traj.samples[n - n_use:, 1]
    return complex(np.mean(z * np.exp(-2j * np.pi * freq * t)))


def fundamental_component(x, sample_rate: float, freq: float,
                          t0: float = 0.0) -> tuple[float, float]:
    """Amplitude and phase of the component A*cos(2 pi f t + phi) in x.

    Projects onto the quadratures over the largest whole number of periods
    that fits, taken from the end of the series.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    periods = math.floor((n - 1) * freq / sample_rate)
    if periods < 1:
        raise DataError(f"series too short to hold one period of {freq:g} Hz")
    n_use = int(round(periods * sample_rate / freq))
    seg = x[n - n_use:]
    t = t0 + (np.arange(n - n_use, n)) / sample_rate
    arg = 2.0 * np.pi * freq * t
    c = 2.0 * np.mean(seg * np.cos(arg))
    s = 2.0 * np.mean(seg * np.sin(arg))
    return float(np.hypot(c, s)), float(math.atan2(-s, c))


def write_trajectory(traj: SpinTrajectory, path, header: dict | None = None) -> None:
    """Columnar text export: t, Sx, Sy, Sz with self-describing header."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# amorsim spin trajectory\n")
        for key, value in (header or {}).items():
            fh.write(f"# {key}: {value}\n")
        fh.write("# columns: t_s Sx Sy Sz\n")
        t = traj.times
        for i in range(traj.n):
            row = traj.samples[i]
            fh.write(f"{t[i]:.17g} {row[0]:.17g} {row[1]:.17g} {row[2]:.17g}\n")
