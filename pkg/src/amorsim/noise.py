"""Probe noise: shot floor, squeezing with loss, flicker, atomic excess.

All levels are expressed as rotation-angle-equivalent noise at the detector
(rad, rad/sqrt(Hz)). Variances are relative to the vacuum (coherent-state)
level, so a lossless coherent probe has variance factor 1. Passive loss eta
mixes in vacuum: v -> eta*v + (1 - eta), which degrades squeezing toward 1
and leaves a coherent probe exactly at 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import core
from .config import ValidatedConfig
from .core import DataError

FLICKER_CORNER_HZ = 100.0
# default flicker level: its PSD crosses the coherent shot floor at this
# frequency, keeping the 200-500 Hz sensitivity band quantum limited
FLICKER_CROSSOVER_HZ = 10.0

EXCESS_EXPONENT = 2.0
# density (cm^-3) where squeezed and coherent noise floors have converged to
# within this many dB; fixes the one free excess-noise coefficient
EXCESS_CONVERGENCE_TEMP_C = 70.0
EXCESS_CONVERGENCE_GAP_DB = 0.2


def loss_propagated_variance(variance: float, eta: float) -> float:
    """Quadrature variance after passive transmission eta: eta*v + (1-eta)."""
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"transmission must lie in [0, 1], got {eta}")
    return eta * variance + (1.0 - eta)


def quadrature_variance(theta: float, v_squeezed: float,
                        v_antisqueezed: float) -> float:
    """Variance of the quadrature at angle theta from the squeezed axis."""
    c, s = math.cos(theta), math.sin(theta)
    return v_squeezed * c * c + v_antisqueezed * s * s


def shot_noise_asd_from_power(power_mw: float, wavelength_nm: float) -> float:
    """Rotation-angle shot noise in rad/sqrt(Hz) for the probe beam."""
    return core.shot_noise_asd(power_mw * 1e-3, wavelength_nm * 1e-9)


def _solve_excess_coeff() -> float:
    """Coefficient of the density power law, fixed by requiring the squeezed
    and coherent floors to close to the convergence gap at the 70 degC
    density (squeezing benefit has vanished there)."""
    cfg_v = core.db_to_variance(-1.9)
    v_loss = loss_propagated_variance(cfg_v, 0.90)
    target = core.db_to_variance(-EXCESS_CONVERGENCE_GAP_DB)
    e70 = (target - v_loss) / (1.0 - target)
    n70 = core.rb_number_density(EXCESS_CONVERGENCE_TEMP_C)
    return e70 / (n70 / core.DENSITY_ANCHOR_CM3) ** EXCESS_EXPONENT


EXCESS_COEFF = _solve_excess_coeff()


def excess_atomic_noise_variance(density_cm3: float,
                                 ref_density_cm3: float = core.DENSITY_ANCHOR_CM3,
                                 coeff: float = EXCESS_COEFF,
                                 exponent: float = EXCESS_EXPONENT) -> float:
    """Density-dependent excess noise (vacuum-relative variance), a power law
    coeff*(n/n_ref)**exponent that is negligible at the reference density and
    dominant at high optical depth."""
    if density_cm3 <= 0:
        raise ValueError("density must be positive")
    return coeff * (density_cm3 / ref_density_cm3) ** exponent


@dataclass(frozen=True)
class NoiseModel:
    shot_asd: float                   # rad/sqrt(Hz)
    squeeze_variance_factor: float    # detected quadrature variance after loss
    flicker_corner: float = FLICKER_CORNER_HZ       # Hz
    flicker_asd_at_corner: float = 0.0              # rad/sqrt(Hz)
    excess_variance_factor: float = 0.0

    @property
    def white_variance_factor(self) -> float:
        return self.squeeze_variance_factor + self.excess_variance_factor

    @property
    def white_asd(self) -> float:
        return self.shot_asd * math.sqrt(self.white_variance_factor)


@dataclass(frozen=True)
class NoiseSeries:
    sample_rate: float
    samples: np.ndarray
    seed: object
    component_breakdown: dict = field(default_factory=dict)


def build_noise_model(cfg: ValidatedConfig, squeezed: bool) -> NoiseModel:
    """Noise model for the configured probe state.

    A coherent probe stays at the vacuum level through loss; the squeezed
    probe contributes the loss-propagated variance of the detected quadrature.
    Flicker defaults put the 1/f crossing of the coherent floor at
    FLICKER_CROSSOVER_HZ with the corner anchored at FLICKER_CORNER_HZ.
    """
    shot = cfg.shot_asd_rad
    sq = cfg.raw.squeeze
    if squeezed and sq.enabled:
        v_in = quadrature_variance(sq.quadrature_angle,
                                   core.db_to_variance(sq.squeezing_dB),
                                   core.db_to_variance(sq.antisqueezing_dB))
        v_det = loss_propagated_variance(v_in, cfg.transmission)
    else:
        v_det = 1.0
    excess = excess_atomic_noise_variance(cfg.density_cm3)
    flicker_at_corner = shot * math.sqrt(FLICKER_CROSSOVER_HZ / FLICKER_CORNER_HZ)
    return NoiseModel(shot_asd=shot, squeeze_variance_factor=v_det,
                      flicker_corner=FLICKER_CORNER_HZ,
                      flicker_asd_at_corner=flicker_at_corner,
                      excess_variance_factor=excess)


def make_rng(seed) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def flicker_series(n: int, sample_rate: float, asd_at_corner: float,
                   corner: float, rng: np.random.Generator) -> np.ndarray:
    """Gaussian noise with one-sided PSD asd_at_corner**2 * (corner/f),
    built by -10 dB/decade spectral shaping of white noise (DC bin zeroed)."""
    if n < 2:
        raise DataError("flicker synthesis needs at least 2 samples")
    w = rng.standard_normal(n)
    spec = np.fft.rfft(w)
    freqs = np.fft.rfftfreq(n, d=1.0 / sample_rate)
    gain = np.zeros_like(freqs)
    gain[1:] = asd_at_corner * np.sqrt(corner / freqs[1:] * sample_rate / 2.0)
    return np.fft.irfft(spec * gain, n=n)


def synthesize_probe_noise(model: NoiseModel, n: int, sample_rate: float,
                           seed, carrier_freq: float = 0.0) -> NoiseSeries:
    """Rotation-equivalent probe noise series.

    White component: one-sided ASD = shot_asd*sqrt(squeeze + excess factors).
    Flicker component: 1/f below the corner. At carrier_freq = 0 the flicker
    sits at baseband; a nonzero carrier places it in both quadratures around
    that frequency, so it demodulates back to 1/f in the lock-in output at
    the level the model states. Same seed, same bytes.
    """
    rng = make_rng(seed)
    sigma = model.white_asd * math.sqrt(sample_rate / 2.0)
    out = sigma * rng.standard_normal(n)
    white_var = sigma * sigma
    flick_var = 0.0
    if model.flicker_asd_at_corner > 0.0:
        if carrier_freq == 0.0:
            flick = flicker_series(n, sample_rate, model.flicker_asd_at_corner,
                                   model.flicker_corner, rng)
            out += flick
            flick_var = float(np.var(flick))
        else:
            a = flicker_series(n, sample_rate, model.flicker_asd_at_corner,
                               model.flicker_corner, rng)
            b = flicker_series(n, sample_rate, model.flicker_asd_at_corner,
                               model.flicker_corner, rng)
            t = np.arange(n) / sample_rate
            arg = 2.0 * np.pi * carrier_freq * t
            flick = a * np.cos(arg) + b * np.sin(arg)
            out += flick
            flick_var = float(np.var(flick))
    shot_var = model.shot_asd**2 * sample_rate / 2.0
    breakdown = {
        "white_variance": white_var,
        "white_rel_shot_db": core.variance_to_db(white_var / shot_var),
        "squeeze_variance_factor": model.squeeze_variance_factor,
        "excess_variance_factor": model.excess_variance_factor,
        "flicker_variance": flick_var,
        "flicker_rel_shot_db": (core.variance_to_db(flick_var / shot_var)
                                if flick_var > 0 else None),
    }
    return NoiseSeries(sample_rate=sample_rate, samples=out, seed=seed,
                       component_breakdown=breakdown)
