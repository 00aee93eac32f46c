"""Experiment configuration: schema, validation, presets, file round-trip.

Configs are plain frozen dataclasses mirroring the JSON file layout. All
checks run in validate_config, which either raises ConfigError listing every
violated constraint by field path or returns an immutable ValidatedConfig
with the derived quantities (Larmor rate, vapor density, shot-noise floor)
attached. Frequencies are Hz and fields gauss at this surface; angular rad/s
appears only in the derived values consumed by the dynamics code.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field as _field
from typing import Any

from . import core
from .core import ConfigError

WAVEFORMS = ("square", "sine")
FILTER_ORDERS = (1, 2, 3, 4)
NYQUIST_MARGIN = 4.0

# effective coupling saturates with optical depth; peak placed at the density
# reached near the top of the signal-vs-temperature curve
SIGNAL_SATURATION_TEMP_C = 55.0

# response normalization temperature used by temperature scans (distinct from
# the 40.3 degC density anchor)
RESPONSE_NORM_TEMP_C = 40.8


@dataclass(frozen=True)
class FieldConfig:
    bias_Bz: float = 0.800            # gauss
    gamma: float = core.GAMMA_DEFAULT_HZ_PER_G   # Hz/G
    injection_amplitude: float = 0.0  # gauss
    injection_freq: float | None = None  # Hz


@dataclass(frozen=True)
class PumpConfig:
    peak_rate_R0: float = 3.0e4       # 1/s
    mod_freq: float = 580.0e3         # Hz
    duty: float = 0.5
    waveform: str = "square"


@dataclass(frozen=True)
class ProbeConfig:
    power: float = 6.5                # mW
    wavelength: float = 795.0         # nm
    # rad of rotation per unit Sy; fixed once so the default coherent
    # sensitivity plateau sits at 250 pT/rtHz, never fitted at runtime
    coupling_kappa: float = 1.652655848e-4
    detector_gain: float = 1000.0     # V/rad at the configured probe power


@dataclass(frozen=True)
class CellConfig:
    temperature: float = 40.3         # degC
    length: float = 75.0              # mm
    density_override: float | None = None  # cm^-3
    absorption_fraction: float = 0.10
    relaxation_Gamma: float = 62832.0  # 1/s, ~2*pi*10 kHz


@dataclass(frozen=True)
class SqueezeConfig:
    squeezing_dB: float = -1.9
    antisqueezing_dB: float = 8.0
    quadrature_angle: float = 0.0     # rad
    enabled: bool = True


@dataclass(frozen=True)
class DetectionConfig:
    sample_rate: float = 2.5e6        # S/s
    lockin_time_constant: float = 300.0e-6  # s
    lockin_filter_order: int = 1
    lockin_phase: float = 0.0         # rad
    sa_rbw: float = 1000.0            # Hz
    sa_vbw: float = 1.0               # Hz
    rng_seed: int = 12345


@dataclass(frozen=True)
class ExperimentConfig:
    field: FieldConfig = _field(default_factory=FieldConfig)
    pump: PumpConfig = _field(default_factory=PumpConfig)
    probe: ProbeConfig = _field(default_factory=ProbeConfig)
    cell: CellConfig = _field(default_factory=CellConfig)
    squeeze: SqueezeConfig = _field(default_factory=SqueezeConfig)
    detection: DetectionConfig = _field(default_factory=DetectionConfig)


_SECTIONS = ("field", "pump", "probe", "cell", "squeeze", "detection")
_SECTION_TYPES = {
    "field": FieldConfig,
    "pump": PumpConfig,
    "probe": ProbeConfig,
    "cell": CellConfig,
    "squeeze": SqueezeConfig,
    "detection": DetectionConfig,
}


def _is_real(x: Any) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


def _check(errors, path, ok, msg):
    if not ok:
        errors.append((path, msg))
    return ok


@dataclass(frozen=True)
class ValidatedConfig:
    """ExperimentConfig plus derived quantities, immutable after validation."""

    raw: ExperimentConfig
    larmor_hz: float          # gamma * |Bz|
    omega_l: float            # signed Larmor rate, rad/s
    omega_m: float            # pump modulation rate, rad/s
    drive_fundamental: float  # amplitude of the pump-rate fundamental, 1/s
    density_cm3: float
    shot_asd_rad: float       # coherent-probe rotation noise, rad/sqrt(Hz)
    transmission: float       # 1 - absorption_fraction
    config_hash: str

    @property
    def fs(self) -> float:
        return self.raw.detection.sample_rate

    @property
    def gamma_relax(self) -> float:
        return self.raw.cell.relaxation_Gamma


def _validate_numbers(cfg: ExperimentConfig, errors) -> None:
    f, p, pr, c, sq, d = (cfg.field, cfg.pump, cfg.probe, cfg.cell,
                          cfg.squeeze, cfg.detection)
    _check(errors, "field.bias_Bz", _is_real(f.bias_Bz), "must be a finite number")
    _check(errors, "field.gamma", _is_real(f.gamma) and f.gamma > 0,
           "gyromagnetic ratio must be > 0 Hz/G")
    _check(errors, "field.injection_amplitude",
           _is_real(f.injection_amplitude) and f.injection_amplitude >= 0,
           "must be >= 0 gauss")
    if f.injection_amplitude > 0 or f.injection_freq is not None:
        _check(errors, "field.injection_freq",
               f.injection_freq is not None and _is_real(f.injection_freq)
               and f.injection_freq > 0,
               "must be a positive frequency when injection is used")

    _check(errors, "pump.peak_rate_R0", _is_real(p.peak_rate_R0) and p.peak_rate_R0 > 0,
           "must be > 0 1/s")
    _check(errors, "pump.mod_freq", _is_real(p.mod_freq) and p.mod_freq > 0,
           "must be > 0 Hz")
    _check(errors, "pump.duty", _is_real(p.duty) and 0.0 < p.duty < 1.0,
           f"duty cycle must lie in (0, 1), got {p.duty}")
    _check(errors, "pump.waveform", p.waveform in WAVEFORMS,
           f"must be one of {WAVEFORMS}, got {p.waveform!r}")

    _check(errors, "probe.power", _is_real(pr.power) and pr.power > 0, "must be > 0 mW")
    _check(errors, "probe.wavelength", _is_real(pr.wavelength) and pr.wavelength > 0,
           "must be > 0 nm")
    _check(errors, "probe.coupling_kappa",
           _is_real(pr.coupling_kappa) and pr.coupling_kappa > 0, "must be > 0 rad")
    _check(errors, "probe.detector_gain",
           _is_real(pr.detector_gain) and pr.detector_gain > 0, "must be > 0 V/rad")

    lo, hi = core.DENSITY_DOMAIN_C
    _check(errors, "cell.temperature",
           _is_real(c.temperature) and lo <= c.temperature <= hi,
           f"must lie in [{lo}, {hi}] degC, got {c.temperature}")
    _check(errors, "cell.length", _is_real(c.length) and c.length > 0, "must be > 0 mm")
    if c.density_override is not None:
        _check(errors, "cell.density_override",
               _is_real(c.density_override) and c.density_override > 0,
               "must be > 0 cm^-3 when set")
    _check(errors, "cell.absorption_fraction",
           _is_real(c.absorption_fraction) and 0.0 <= c.absorption_fraction < 1.0,
           f"must lie in [0, 1), got {c.absorption_fraction}")
    _check(errors, "cell.relaxation_Gamma",
           _is_real(c.relaxation_Gamma) and c.relaxation_Gamma > 0, "must be > 0 1/s")

    _check(errors, "squeeze.squeezing_dB",
           _is_real(sq.squeezing_dB) and sq.squeezing_dB <= 0.0,
           f"squeezed level must be <= 0 dB, got {sq.squeezing_dB}")
    _check(errors, "squeeze.antisqueezing_dB",
           _is_real(sq.antisqueezing_dB) and sq.antisqueezing_dB >= 0.0,
           f"antisqueezed level must be >= 0 dB, got {sq.antisqueezing_dB}")
    if _is_real(sq.squeezing_dB) and _is_real(sq.antisqueezing_dB):
        _check(errors, "squeeze",
               sq.squeezing_dB + sq.antisqueezing_dB >= 0.0,
               "uncertainty product below the vacuum limit: "
               f"squeezing_dB + antisqueezing_dB = "
               f"{sq.squeezing_dB + sq.antisqueezing_dB:+.3f} dB < 0")
    _check(errors, "squeeze.quadrature_angle", _is_real(sq.quadrature_angle),
           "must be a finite angle in rad")
    _check(errors, "squeeze.enabled", isinstance(sq.enabled, bool),
           "must be true or false")

    _check(errors, "detection.sample_rate",
           _is_real(d.sample_rate) and d.sample_rate > 0, "must be > 0 S/s")
    if _is_real(d.sample_rate) and _is_real(p.mod_freq) and p.mod_freq > 0:
        bound = NYQUIST_MARGIN * p.mod_freq
        _check(errors, "detection.sample_rate", d.sample_rate > bound,
               f"sample_rate {d.sample_rate:g} S/s does not clear the Nyquist "
               f"margin: must exceed {NYQUIST_MARGIN:g} x mod_freq = {bound:g} S/s")
    _check(errors, "detection.lockin_time_constant",
           _is_real(d.lockin_time_constant) and d.lockin_time_constant > 0,
           "must be > 0 s")
    _check(errors, "detection.lockin_filter_order",
           isinstance(d.lockin_filter_order, int)
           and not isinstance(d.lockin_filter_order, bool)
           and d.lockin_filter_order in FILTER_ORDERS,
           f"must be one of {FILTER_ORDERS}, got {d.lockin_filter_order!r}")
    _check(errors, "detection.lockin_phase", _is_real(d.lockin_phase),
           "must be a finite angle in rad")
    rbw_ok = _check(errors, "detection.sa_rbw", _is_real(d.sa_rbw) and d.sa_rbw > 0,
                    "must be > 0 Hz")
    vbw_ok = _check(errors, "detection.sa_vbw", _is_real(d.sa_vbw) and d.sa_vbw > 0,
                    "must be > 0 Hz")
    if rbw_ok and vbw_ok:
        _check(errors, "detection.sa_vbw", d.sa_vbw <= d.sa_rbw,
               f"video bandwidth {d.sa_vbw:g} Hz must not exceed resolution "
               f"bandwidth {d.sa_rbw:g} Hz")
    _check(errors, "detection.rng_seed",
           isinstance(d.rng_seed, int) and not isinstance(d.rng_seed, bool)
           and 0 <= d.rng_seed < 2**64,
           "must be an integer in [0, 2**64)")


def drive_fundamental(peak_rate: float, duty: float, waveform: str) -> float:
    """Amplitude of the pump-rate Fourier component at the modulation frequency."""
    if waveform == "sine":
        return 0.5 * peak_rate
    return 2.0 * peak_rate * math.sin(math.pi * duty) / math.pi


def validate_config(cfg: ExperimentConfig) -> ValidatedConfig:
    """Check every constraint; raise ConfigError listing all violations."""
    errors: list[tuple[str, str]] = []
    _validate_numbers(cfg, errors)
    if errors:
        raise ConfigError(errors)

    f, p, pr, c = cfg.field, cfg.pump, cfg.probe, cfg.cell
    if c.density_override is not None:
        density = c.density_override
    else:
        density = core.rb_number_density(c.temperature)
    return ValidatedConfig(
        raw=cfg,
        larmor_hz=core.larmor_frequency(f.bias_Bz, f.gamma),
        omega_l=2.0 * math.pi * f.gamma * f.bias_Bz,
        omega_m=2.0 * math.pi * p.mod_freq,
        drive_fundamental=drive_fundamental(p.peak_rate_R0, p.duty, p.waveform),
        density_cm3=density,
        shot_asd_rad=core.shot_noise_asd(pr.power * 1e-3, pr.wavelength * 1e-9),
        transmission=1.0 - c.absorption_fraction,
        config_hash=config_hash(cfg),
    )


# ---------------------------------------------------------------- file I/O

def config_to_dict(cfg: ExperimentConfig) -> dict:
    return {name: dataclasses.asdict(getattr(cfg, name)) for name in _SECTIONS}


def config_from_dict(data: dict) -> ExperimentConfig:
    """Build a config from a nested dict; unknown names are rejected."""
    if not isinstance(data, dict):
        raise ConfigError([("", "config must be a mapping of sections")])
    errors = []
    unknown = set(data) - set(_SECTIONS)
    for name in sorted(unknown):
        errors.append((name, f"unknown section (expected one of {_SECTIONS})"))
    kwargs = {}
    for name in _SECTIONS:
        section_type = _SECTION_TYPES[name]
        payload = data.get(name, {})
        if not isinstance(payload, dict):
            errors.append((name, "section must be a mapping"))
            continue
        known = {fld.name for fld in dataclasses.fields(section_type)}
        bad = set(payload) - known
        for key in sorted(bad):
            errors.append((f"{name}.{key}",
                           f"unknown field (expected one of {sorted(known)})"))
        clean = {k: v for k, v in payload.items() if k in known}
        if "rng_seed" in clean and isinstance(clean["rng_seed"], float):
            if clean["rng_seed"].is_integer():
                clean["rng_seed"] = int(clean["rng_seed"])
        if "lockin_filter_order" in clean and isinstance(clean["lockin_filter_order"], float):
            if clean["lockin_filter_order"].is_integer():
                clean["lockin_filter_order"] = int(clean["lockin_filter_order"])
        kwargs[name] = section_type(**clean)
    if errors:
        raise ConfigError(errors)
    return ExperimentConfig(**kwargs)


def save_config(cfg: ExperimentConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(config_to_dict(cfg), fh, indent=2)
        fh.write("\n")


def load_config(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError([("", f"not valid JSON: {exc}")]) from exc
    return config_from_dict(data)


def config_hash(cfg: ExperimentConfig) -> str:
    """Digest of the canonical JSON form; stable across runs and platforms."""
    canon = json.dumps(config_to_dict(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]


def apply_overrides(cfg: ExperimentConfig, assignments) -> ExperimentConfig:
    """Apply 'section.field=value' strings on top of an existing config."""
    data = config_to_dict(cfg)
    errors = []
    for item in assignments:
        if "=" not in item:
            errors.append((item, "override must look like section.field=value"))
            continue
        key, _, raw = item.partition("=")
        parts = key.strip().split(".")
        if len(parts) != 2 or parts[0] not in _SECTIONS:
            errors.append((key, "override key must be section.field with a known section"))
            continue
        section, name = parts
        known = {fld.name for fld in dataclasses.fields(_SECTION_TYPES[section])}
        if name not in known:
            errors.append((key, f"unknown field (expected one of {sorted(known)})"))
            continue
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        data[section][name] = value
    if errors:
        raise ConfigError(errors)
    return config_from_dict(data)


# ---------------------------------------------------------------- presets

def paper_default() -> ExperimentConfig:
    """Default operating point: 0.8 G bias, 580 kHz stroboscopic pump,
    6.5 mW / 795 nm squeezed probe, 40.3 degC cell."""
    return ExperimentConfig()


def textbook_gamma() -> ExperimentConfig:
    """Same operating point but the textbook 87Rb F=2 gyromagnetic ratio;
    the resonance field moves accordingly."""
    base = ExperimentConfig()
    fld = dataclasses.replace(base.field, gamma=core.GAMMA_RB87_F2_HZ_PER_G)
    return dataclasses.replace(base, field=fld)


PRESETS = {
    "paper-default": paper_default,
    "textbook-gamma": textbook_gamma,
}


def load_preset(name: str) -> ExperimentConfig:
    try:
        maker = PRESETS[name]
    except KeyError:
        raise ConfigError([("preset", f"unknown preset {name!r}; "
                            f"available: {sorted(PRESETS)}")]) from None
    return maker()
