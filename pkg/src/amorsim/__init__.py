"""Deterministic simulator of an amplitude-modulated optical-rotation
magnetometer probed with squeezed or coherent light.

Layers: config (validated experiment description), spin (driven Bloch
dynamics), noise (probe quantum/technical noise synthesis), dsp (lock-in,
spectra), sensitivity (discrimination slope, response, delta-B floor),
scenarios (named runs with deterministic artifacts and manifests).
"""
from .backend import active_backend, use_numba
from .config import (CellConfig, DetectionConfig, ExperimentConfig,
                     FieldConfig, ProbeConfig, PumpConfig, SqueezeConfig,
                     ValidatedConfig, apply_overrides, config_hash,
                     load_config, load_preset, paper_default, PRESETS,
                     save_config, validate_config)
from .core import (AmorsimError, ConfigError, DataError, NumericError,
                   TOOL_VERSION, db_to_variance, larmor_frequency,
                   photon_flux, rb_number_density, shot_noise_asd,
                   variance_to_db)
from .dsp import (DetectorSeries, LockinOutput, LockinStream, Spectrum,
                  assemble_detector_output, auto_phase, lockin_demodulate,
                  noise_floor_estimate, psd_estimate, sa_trace,
                  tone_amplitude)
from .noise import (NoiseModel, NoiseSeries, build_noise_model,
                    excess_atomic_noise_variance, loss_propagated_variance,
                    quadrature_variance, synthesize_probe_noise)
from .scenarios import (RunManifest, Scenario, TempScanResult,
                        ValidationReport, run_scenario, temp_scan, validate)
from .sensitivity import (DiscriminationCurve, ResponseSpectrum,
                          SensitivityReport, discrimination_sweep,
                          improvement_percent, response_spectrum,
                          sensitivity_spectrum)
from .spin import (RwaSolution, SpinState, SpinTrajectory, integrate_spin,
                   rwa_steady_state, static_rotation_curve)

__version__ = TOOL_VERSION

__all__ = [
    "AmorsimError", "CellConfig", "ConfigError", "DataError",
    "DetectionConfig", "DetectorSeries", "DiscriminationCurve",
    "ExperimentConfig", "FieldConfig", "LockinOutput", "LockinStream",
    "NoiseModel", "NoiseSeries", "NumericError", "PRESETS", "ProbeConfig",
    "PumpConfig", "ResponseSpectrum", "RunManifest", "RwaSolution",
    "Scenario", "SensitivityReport", "Spectrum", "SpinState",
    "SpinTrajectory", "SqueezeConfig", "TempScanResult", "TOOL_VERSION",
    "ValidatedConfig", "ValidationReport", "active_backend",
    "apply_overrides", "assemble_detector_output", "auto_phase",
    "build_noise_model", "config_hash", "db_to_variance",
    "discrimination_sweep", "excess_atomic_noise_variance",
    "improvement_percent", "integrate_spin", "larmor_frequency",
    "load_config", "load_preset", "lockin_demodulate",
    "loss_propagated_variance", "noise_floor_estimate", "paper_default",
    "photon_flux", "psd_estimate", "quadrature_variance",
    "rb_number_density", "response_spectrum", "run_scenario",
    "rwa_steady_state", "sa_trace", "save_config", "sensitivity_spectrum",
    "shot_noise_asd", "static_rotation_curve", "synthesize_probe_noise",
    "temp_scan", "tone_amplitude", "use_numba", "validate",
    "validate_config", "variance_to_db", "__version__",
]
