"""Named experiment scenarios with deterministic artifacts and run manifests.

Each scenario validates its configuration, runs the simulation chain, and
writes plot-ready columnar text files plus a manifest listing every artifact
with a content digest. Outputs are pure functions of (config, overrides,
seed): per-component random streams are derived from the single top-level
seed as SeedSequence([seed, sha256_64(label)]) so adding a step never
perturbs existing streams. Manifest wall times honor SOURCE_DATE_EPOCH for
byte-reproducible reruns.
"""
from __future__ import annotations

import dataclasses
import hashlib
import math
import os
import time
from dataclasses import dataclass, field as _field
from datetime import datetime, timezone

import numpy as np

from . import dsp, noise, sensitivity, spin
from .config import (RESPONSE_NORM_TEMP_C, SIGNAL_SATURATION_TEMP_C,
                     ExperimentConfig, ValidatedConfig, apply_overrides,
                     validate_config)
from .core import (ConfigError, DataError, DENSITY_ANCHOR_CM3, GAUSS_TO_PT,
                   TOOL_VERSION, db_to_variance, rb_number_density,
                   variance_to_db)
from .noise import loss_propagated_variance

SCENARIO_NAMES = ("dc-sweep", "lockin-sweep", "sa-compare", "sensitivity",
                  "temp-scan", "validate")

DC_SWEEP_POINTS = 301
DC_SWEEP_HALF_WIDTHS = 5.0      # sweep span in units of the DC linewidth
LOCKIN_SWEEP_POINTS = 201
LOCKIN_SWEEP_MARGIN = 1.25      # span = +-margin * resonance field
DISCRIMINATION_POINTS = 97
DISCRIMINATION_HALF_WIDTHS = 4.0
SA_SPAN_HZ = 100.0e3
SA_EXCLUSION_HZ = 3.0e3         # carrier region dropped from floor medians
NOISE_SECONDS = 150.0           # demodulated-noise record per probe state
NOISE_DECIMATE = 250
NOISE_SEGMENT_BW_HZ = 1.0
REPORT_TABLE_MAX_HZ = 2000.0
TEMP_GRID_C = (40.8, 45.0, 50.0, 55.0, 60.0, 65.0, 70.0)
TEMP_RANGE_C = (40.0, 70.0)
VALIDATE_SUBSTEP_CAP = 4096

# self-check tolerances
RWA_CHECK_TOL = 0.02
TONE_CHECK_TOL = 1.0e-3
PARSEVAL_CHECK_TOL = 0.01
LOSS_CHECK_EXPECT_DB = -1.67
LOSS_CHECK_TOL_DB = 0.01


@dataclass(frozen=True)
class Scenario:
    name: str
    config: ExperimentConfig
    overrides: tuple = ()
    output_dir: str = "."


@dataclass(frozen=True)
class RunManifest:
    scenario: str
    config_hash: str
    seed: int
    tool_version: str
    started_utc: str
    finished_utc: str
    artifacts: tuple          # (relative name, sha256 hex) pairs
    summary: dict = _field(default_factory=dict, compare=False)

    def to_text(self) -> str:
        lines = ["# amorsim run manifest",
                 f"tool_version: {self.tool_version}",
                 f"scenario: {self.scenario}",
                 f"config_hash: {self.config_hash}",
                 f"seed: {self.seed}",
                 f"started_utc: {self.started_utc}",
                 f"finished_utc: {self.finished_utc}",
                 "artifacts:"]
        lines += [f"  {digest}  {name}" for name, digest in self.artifacts]
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class TempScanResult:
    temperatures: np.ndarray      # degC
    densities: np.ndarray         # cm^-3
    signal_norm: np.ndarray       # 1 at RESPONSE_NORM_TEMP_C
    floor_coherent: np.ndarray    # dB re 1 V^2/Hz
    floor_squeezed: np.ndarray
    snr_coherent_norm: np.ndarray  # 1 for coherent at RESPONSE_NORM_TEMP_C
    snr_squeezed_norm: np.ndarray


@dataclass(frozen=True)
class ValidationCheck:
    name: str
    passed: bool
    measured: float
    tolerance: float
    detail: str


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


def derive_seed_entropy(master_seed: int, label: str) -> list[int]:
    """Entropy list for a named child stream: [master, sha256_64(label)]."""
    h = int.from_bytes(hashlib.sha256(label.encode("utf-8")).digest()[:8],
                       "big")
    return [int(master_seed), h]


def _utc_iso(ts: float) -> str:
    return datetime.fromtimestamp(ts, tz=timezone.utc).strftime(
        "%Y-%m-%dT%H:%M:%SZ")


def _manifest_times(started: float, finished: float) -> tuple[str, str]:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch is not None:
        pinned = _utc_iso(float(int(epoch)))
        return pinned, pinned
    return _utc_iso(started), _utc_iso(finished)


class _ArtifactSet:
    """Tracks scenario output files so failures can clean up and the
    manifest can list digests; the manifest itself is written last."""

    def __init__(self, out_dir: str, vcfg: ValidatedConfig, scenario: str):
        self.out_dir = out_dir
        self.vcfg = vcfg
        self.scenario = scenario
        self.names: list[str] = []

    def base_header(self, **extra) -> dict:
        head = {"scenario": self.scenario,
                "tool_version": TOOL_VERSION,
                "config_hash": self.vcfg.config_hash,
                "seed": self.vcfg.raw.detection.rng_seed}
        head.update(extra)
        return head

    def path(self, name: str) -> str:
        self.names.append(name)
        return os.path.join(self.out_dir, name)

    def write_columns(self, name: str, header: dict, columns: dict) -> None:
        cols = {k: np.asarray(v, dtype=float) for k, v in columns.items()}
        with open(self.path(name), "w", encoding="utf-8") as fh:
            for key, value in header.items():
                fh.write(f"# {key}: {value}\n")
            fh.write("# columns: " + " ".join(cols) + "\n")
            np.savetxt(fh, np.column_stack(list(cols.values())), fmt="%.17g")

    def write_text(self, name: str, text: str) -> None:
        with open(self.path(name), "w", encoding="utf-8") as fh:
            fh.write(text)

    def discard(self) -> None:
        for name in self.names:
            full = os.path.join(self.out_dir, name)
            if os.path.exists(full):
                os.remove(full)

    def digests(self) -> tuple:
        out = []
        for name in sorted(self.names):
            with open(os.path.join(self.out_dir, name), "rb") as fh:
                out.append((name, hashlib.sha256(fh.read()).hexdigest()))
        return tuple(out)


# ------------------------------------------------------------- dc sweep

def _run_dc_sweep(vcfg: ValidatedConfig, art: _ArtifactSet) -> dict:
    gamma = vcfg.raw.field.gamma
    b_half = vcfg.gamma_relax / (2.0 * math.pi * gamma)
    span = DC_SWEEP_HALF_WIDTHS * b_half
    b = np.linspace(-span, span, DC_SWEEP_POINTS)
    phi = spin.static_rotation_curve(vcfg, b)
    volts = vcfg.raw.probe.detector_gain * phi
    b_max = float(b[np.argmax(phi)])
    b_min = float(b[np.argmin(phi)])
    art.write_columns(
        "dc_sweep.txt",
        art.base_header(extremum_expected_g=f"{b_half:.17g}",
                        extremum_positive_g=f"{b_max:.17g}",
                        extremum_negative_g=f"{b_min:.17g}"),
        {"bias_g": b, "rotation_rad": phi, "detector_v": volts})
    return {"extremum_expected_g": b_half, "extremum_positive_g": b_max,
            "extremum_negative_g": b_min, "grid_step_g": float(b[1] - b[0])}


# --------------------------------------------------------- lock-in sweep

def _all_crossings(b: np.ndarray, v: np.ndarray) -> list[tuple[float, float]]:
    """Every sign-change zero crossing (linear interpolation) with the local
    slope across the crossing cell."""
    out = []
    for k in range(b.size - 1):
        v0, v1 = float(v[k]), float(v[k + 1])
        if v0 == 0.0:
            j0, j1 = (k, k + 1) if k == 0 else (k - 1, k + 1)
            out.append((float(b[k]), (float(v[j1]) - float(v[j0]))
                        / float(b[j1] - b[j0])))
        elif v0 * v1 < 0.0:
            slope = (v1 - v0) / float(b[k + 1] - b[k])
            out.append((float(b[k] - v0 / slope), slope))
    if float(v[-1]) == 0.0:
        out.append((float(b[-1]),
                    float(v[-1] - v[-2]) / float(b[-1] - b[-2])))
    return out


def _run_lockin_sweep(vcfg: ValidatedConfig, art: _ArtifactSet) -> dict:
    b_res = vcfg.raw.pump.mod_freq / vcfg.raw.field.gamma
    span = LOCKIN_SWEEP_MARGIN * b_res
    b = np.linspace(-span, span, LOCKIN_SWEEP_POINTS)
    x0 = np.empty(b.size)
    y0 = np.empty(b.size)
    for i, bias in enumerate(b):
        x0[i], y0[i] = sensitivity.steady_lockin_point(
            sensitivity.with_bias(vcfg, float(bias)))
    phase = dsp.auto_phase(b, x0, y0)
    x, y = dsp.rotate_xy(x0, y0, phase)
    crossings = _all_crossings(b, x)
    strongest = sorted(crossings, key=lambda c: -abs(c[1]))[:2]
    strongest = sorted(c[0] for c in strongest)
    art.write_columns(
        "lockin_sweep.txt",
        art.base_header(lockin_phase_rad=f"{phase:.17g}",
                        resonance_expected_g=f"{b_res:.17g}",
                        crossings_g=" ".join(f"{c[0]:.17g}"
                                             for c in crossings)),
        {"bias_g": b, "x_v": x, "y_v": y, "r_v": np.hypot(x, y)})
    return {"phase_rad": phase, "resonance_expected_g": b_res,
            "grid_step_g": float(b[1] - b[0]),
            "crossings_g": [c[0] for c in crossings],
            "strongest_crossings_g": strongest}


# ----------------------------------------------------------- sa compare

def _sa_steady_rotation(vcfg: ValidatedConfig, n: int) -> np.ndarray:
    k = spin.integration_substeps(vcfg)
    dt = 1.0 / (vcfg.fs * k)
    duration = (n / vcfg.fs
                + (spin.TRANSIENT_LIFETIMES + 1.0) / vcfg.gamma_relax)
    traj = spin.integrate_spin(vcfg, duration, dt, record_stride=k,
                               discard_transient=True)
    phi = spin.rotation_timeseries(traj, vcfg.raw.probe)
    if phi.shape[0] < n:
        raise DataError("steady-state record shorter than the analyzer needs")
    return phi[:n]


def _sa_state_trace(vcfg: ValidatedConfig, rot: np.ndarray, squeezed: bool,
                    label: str) -> tuple[dsp.Spectrum, float, dict]:
    det = vcfg.raw.detection
    model = noise.build_noise_model(vcfg, squeezed)
    seed = derive_seed_entropy(det.rng_seed, label)
    series = noise.synthesize_probe_noise(model, rot.shape[0], vcfg.fs, seed,
                                          carrier_freq=vcfg.raw.pump.mod_freq)
    volts = dsp.assemble_detector_output(rot, vcfg.fs, series,
                                         vcfg.raw.probe.detector_gain)
    trace = dsp.sa_trace(volts.volts, vcfg.fs, det.sa_rbw, det.sa_vbw,
                         center=vcfg.raw.pump.mod_freq, span=SA_SPAN_HZ)
    floor, _ = dsp.noise_floor_estimate(trace, SA_EXCLUSION_HZ)
    return trace, floor, series.component_breakdown


def _run_sa_compare(vcfg: ValidatedConfig, art: _ArtifactSet) -> dict:
    det = vcfg.raw.detection
    n = int(round(vcfg.fs / det.sa_vbw))
    rot = _sa_steady_rotation(vcfg, n)
    results = {}
    for state, squeezed in (("coherent", False), ("squeezed", True)):
        trace, floor, breakdown = _sa_state_trace(vcfg, rot, squeezed,
                                                  f"sa-compare/{state}")
        results[state] = (trace, floor, breakdown)
        dsp.write_spectrum(
            trace, art.path(f"sa_{state}.txt"),
            header=art.base_header(probe_state=state,
                                   floor_db=f"{float(dsp.to_db(floor)):.17g}"),
            db=True)
    floor_c = float(dsp.to_db(results["coherent"][1]))
    floor_s = float(dsp.to_db(results["squeezed"][1]))
    carrier = dsp.tone_amplitude(results["coherent"][0],
                                 vcfg.raw.pump.mod_freq)
    summary = {"floor_coherent_db": floor_c, "floor_squeezed_db": floor_s,
               "floor_gap_db": floor_c - floor_s,
               "carrier_amplitude_v": carrier,
               "rbw_hz": det.sa_rbw, "vbw_hz": det.sa_vbw}
    art.write_text("sa_summary.txt", "".join(
        f"{k}: {v:.17g}\n" if isinstance(v, float) else f"{k}: {v}\n"
        for k, v in {**art.base_header(), **summary}.items()))
    return summary


# ----------------------------------------------------------- sensitivity

def _demodulated_noise_spectrum(vcfg: ValidatedConfig, squeezed: bool,
                                label: str, phase: float,
                                seconds: float = NOISE_SECONDS,
                                decimate: int = NOISE_DECIMATE,
                                segment_bw: float = NOISE_SEGMENT_BW_HZ
                                ) -> dsp.Spectrum:
    """ASD of the lock-in X output fed by probe noise alone.

    The full-rate stream is demodulated in chunks; the carrier-band flicker
    quadratures are synthesized once at the decimated rate and zero-order-held
    onto the carrier, which only distorts them above the decimated Nyquist.
    """
    det = vcfg.raw.detection
    model = noise.build_noise_model(vcfg, squeezed)
    fs = vcfg.fs
    fs_dec = fs / decimate
    n_dec = int(round(seconds * fs_dec))
    rng = noise.make_rng(derive_seed_entropy(det.rng_seed, label))
    flick_a = noise.flicker_series(n_dec, fs_dec, model.flicker_asd_at_corner,
                                   model.flicker_corner, rng)
    flick_b = noise.flicker_series(n_dec, fs_dec, model.flicker_asd_at_corner,
                                   model.flicker_corner, rng)
    sigma_white = model.white_asd * math.sqrt(fs / 2.0)
    gain = vcfg.raw.probe.detector_gain
    stream = dsp.LockinStream(fs, vcfg.raw.pump.mod_freq, phase,
                              det.lockin_time_constant,
                              det.lockin_filter_order, decimate=decimate)
    two_pi_fc = 2.0 * math.pi * vcfg.raw.pump.mod_freq
    xs = []
    chunk_dec = 8192
    pos = 0
    for start in range(0, n_dec, chunk_dec):
        m = min(chunk_dec, n_dec - start)
        n_raw = m * decimate
        t = (pos + np.arange(n_raw)) / fs
        rot = rng.standard_normal(n_raw)
        rot *= sigma_white
        arg = two_pi_fc * t
        rot += np.repeat(flick_a[start:start + m], decimate) * np.cos(arg)
        rot += np.repeat(flick_b[start:start + m], decimate) * np.sin(arg)
        x, _ = stream.push(gain * rot)
        xs.append(x)
        pos += n_raw
    x = np.concatenate(xs)
    n_settle = int(math.ceil(dsp.SETTLE_TIME_CONSTANTS
                             * det.lockin_time_constant * fs_dec))
    x = x[n_settle:]
    averages = int(x.shape[0] * segment_bw / fs_dec)
    return dsp.psd_estimate(x, fs_dec, segment_bw, averages)


def _run_sensitivity(vcfg: ValidatedConfig, art: _ArtifactSet,
                     noise_seconds: float = NOISE_SECONDS) -> dict:
    det = vcfg.raw.detection
    bias = vcfg.raw.field.bias_Bz
    b_half = vcfg.gamma_relax / (2.0 * math.pi * vcfg.raw.field.gamma)
    span = DISCRIMINATION_HALF_WIDTHS * b_half
    disc = sensitivity.discrimination_sweep(
        vcfg, (bias - span, bias + span), DISCRIMINATION_POINTS)
    art.write_columns(
        "discrimination.txt",
        art.base_header(zero_crossing_g=f"{disc.zero_crossing:.17g}",
                        slope_v_per_g=f"{disc.slope_at_crossing:.17g}",
                        lockin_phase_rad=f"{disc.phase:.17g}"),
        {"bias_g": disc.b_grid, "x_v": disc.x_values, "y_v": disc.y_values})

    op_cfg = sensitivity.with_bias(vcfg, disc.zero_crossing)
    resp = sensitivity.response_spectrum(op_cfg, phase=disc.phase)
    art.write_columns(
        "response.txt",
        art.base_header(dc_response_v_per_g=f"{resp.dc_response:.17g}",
                        atomic_pole_hz=f"{resp.atomic_pole:.17g}",
                        lockin_pole_hz=f"{resp.lockin_pole:.17g}",
                        fit_residual=f"{resp.fit_residual:.17g}"),
        {"freq_hz": resp.freqs, "response_v_per_g": resp.response,
         "fit_v_per_g": sensitivity.response_model(
             resp.freqs, resp.dc_response, resp.atomic_pole,
             resp.lockin_pole)})

    reports = {}
    labels = {}
    for state, squeezed in (("coherent", False), ("squeezed", True)):
        labels[state] = f"sensitivity/noise/{state}"
        spec = _demodulated_noise_spectrum(vcfg, squeezed, labels[state],
                                           disc.phase, seconds=noise_seconds)
        dsp.write_spectrum(spec.to_asd(), art.path(f"noise_{state}.txt"),
                           header=art.base_header(probe_state=state), db=False)
        rep = sensitivity.sensitivity_spectrum(spec, resp)
        reports[state] = rep
        art.write_columns(
            f"sensitivity_{state}.txt",
            art.base_header(probe_state=state,
                            plateau_pt_rthz=f"{rep.plateau_pt:.17g}",
                            band_hz=f"{rep.band[0]:g} {rep.band[1]:g}"),
            {"freq_hz": rep.freqs, "delta_b_g_rthz": rep.delta_b,
             "delta_b_pt_rthz": rep.delta_b_pt})

    improvement = sensitivity.improvement_percent(reports["coherent"],
                                                  reports["squeezed"])
    reports["squeezed"] = dataclasses.replace(
        reports["squeezed"], improvement_percent=improvement)
    ratio = reports["squeezed"].plateau / reports["coherent"].plateau

    coh, sq = reports["coherent"], reports["squeezed"]
    m = coh.freqs <= REPORT_TABLE_MAX_HZ
    lines = [f"# {k}: {v}" for k, v in art.base_header().items()]
    lines += [
        f"band_hz: {coh.band[0]:g} {coh.band[1]:g}",
        f"plateau_coherent_pt_rthz: {coh.plateau_pt:.17g}",
        f"plateau_squeezed_pt_rthz: {sq.plateau_pt:.17g}",
        f"plateau_ratio_squeezed_over_coherent: {ratio:.17g}",
        f"improvement_percent: {improvement:.17g}",
        f"discrimination_slope_v_per_g: {disc.slope_at_crossing:.17g}",
        f"zero_crossing_g: {disc.zero_crossing:.17g}",
        f"seed_label_coherent: {labels['coherent']}",
        f"seed_label_squeezed: {labels['squeezed']}",
        f"seed_entropy_coherent: "
        f"{derive_seed_entropy(det.rng_seed, labels['coherent'])}",
        f"seed_entropy_squeezed: "
        f"{derive_seed_entropy(det.rng_seed, labels['squeezed'])}",
        "# columns: freq_hz delta_b_coherent_pt_rthz delta_b_squeezed_pt_rthz",
    ]
    table = np.column_stack([coh.freqs[m], coh.delta_b_pt[m],
                             sq.delta_b_pt[m]])
    lines += [" ".join(f"{v:.17g}" for v in row) for row in table]
    art.write_text("sensitivity_report.txt", "\n".join(lines) + "\n")

    return {"plateau_coherent_pt_rthz": coh.plateau_pt,
            "plateau_squeezed_pt_rthz": sq.plateau_pt,
            "plateau_ratio": ratio,
            "improvement_percent": improvement,
            "zero_crossing_g": disc.zero_crossing,
            "slope_v_per_g": disc.slope_at_crossing,
            "response_fit_residual": resp.fit_residual}


# ------------------------------------------------------------ temp scan

def _signal_scale(temp_c: float) -> float:
    """Relative signal amplitude vs cell temperature: grows with density and
    saturates past the optimum where absorption and broadening take over."""
    n = rb_number_density(temp_c)
    n_sat = rb_number_density(SIGNAL_SATURATION_TEMP_C)
    return (n / DENSITY_ANCHOR_CM3) / (1.0 + (n / n_sat) ** 2)


def temp_scan(vcfg: ValidatedConfig, t_grid=TEMP_GRID_C) -> TempScanResult:
    """Signal, noise floors, and SNR across cell temperature.

    Signal and SNR are normalized at RESPONSE_NORM_TEMP_C (coherent probe for
    SNR), which therefore must be on the grid.
    """
    temps = [float(t) for t in t_grid]
    lo, hi = TEMP_RANGE_C
    bad = [t for t in temps if not lo <= t <= hi]
    if bad:
        raise ConfigError([("temp-scan",
                            f"grid temperatures {bad} outside [{lo:g}, "
                            f"{hi:g}] degC")])
    if not any(math.isclose(t, RESPONSE_NORM_TEMP_C) for t in temps):
        raise ConfigError([("temp-scan",
                            f"normalization point {RESPONSE_NORM_TEMP_C:g} "
                            "degC missing from the grid")])
    det = vcfg.raw.detection
    n = int(round(vcfg.fs / det.sa_vbw))
    kappa0 = vcfg.raw.probe.coupling_kappa
    scale0 = _signal_scale(vcfg.raw.cell.temperature)
    dens = np.empty(len(temps))
    signal = np.empty(len(temps))
    floor_c = np.empty(len(temps))
    floor_s = np.empty(len(temps))
    for i, t_c in enumerate(temps):
        cell = dataclasses.replace(vcfg.raw.cell, temperature=t_c,
                                   density_override=None)
        probe = dataclasses.replace(
            vcfg.raw.probe,
            coupling_kappa=kappa0 * _signal_scale(t_c) / scale0)
        cfg_t = validate_config(dataclasses.replace(vcfg.raw, cell=cell,
                                                    probe=probe))
        dens[i] = cfg_t.density_cm3
        x, y = sensitivity.steady_lockin_point(cfg_t)
        signal[i] = math.hypot(x, y)
        for state, squeezed, sink in (("coherent", False, floor_c),
                                      ("squeezed", True, floor_s)):
            model = noise.build_noise_model(cfg_t, squeezed)
            seed = derive_seed_entropy(det.rng_seed,
                                       f"temp-scan/{t_c:g}/{state}")
            series = noise.synthesize_probe_noise(
                model, n, cfg_t.fs, seed,
                carrier_freq=cfg_t.raw.pump.mod_freq)
            volts = cfg_t.raw.probe.detector_gain * series.samples
            trace = dsp.sa_trace(volts, cfg_t.fs, det.sa_rbw, det.sa_vbw,
                                 center=cfg_t.raw.pump.mod_freq,
                                 span=SA_SPAN_HZ)
            sink[i], _ = dsp.noise_floor_estimate(trace, SA_EXCLUSION_HZ)

    i_norm = min(range(len(temps)),
                 key=lambda j: abs(temps[j] - RESPONSE_NORM_TEMP_C))
    snr_c = signal / np.sqrt(floor_c)
    snr_s = signal / np.sqrt(floor_s)
    return TempScanResult(
        temperatures=np.asarray(temps),
        densities=dens,
        signal_norm=signal / signal[i_norm],
        floor_coherent=dsp.to_db(floor_c),
        floor_squeezed=dsp.to_db(floor_s),
        snr_coherent_norm=snr_c / snr_c[i_norm],
        snr_squeezed_norm=snr_s / snr_c[i_norm])


def _run_temp_scan(vcfg: ValidatedConfig, art: _ArtifactSet) -> dict:
    res = temp_scan(vcfg)
    art.write_columns(
        "temp_scan.txt",
        art.base_header(normalization_temp_c=f"{RESPONSE_NORM_TEMP_C:g}"),
        {"temp_c": res.temperatures, "density_cm3": res.densities,
         "signal_norm": res.signal_norm,
         "floor_coherent_db": res.floor_coherent,
         "floor_squeezed_db": res.floor_squeezed,
         "snr_coherent_norm": res.snr_coherent_norm,
         "snr_squeezed_norm": res.snr_squeezed_norm})
    i_sig = int(np.argmax(res.signal_norm))
    i_snr = int(np.argmax(res.snr_coherent_norm))
    return {"signal_peak_temp_c": float(res.temperatures[i_sig]),
            "signal_peak_norm": float(res.signal_norm[i_sig]),
            "snr_peak_temp_c": float(res.temperatures[i_snr]),
            "squeezed_floor_below_coherent_everywhere": bool(
                np.all(res.floor_squeezed < res.floor_coherent))}


# ------------------------------------------------------------- validate

def _check_integrator(vcfg: ValidatedConfig,
                      max_substeps: int | None) -> ValidationCheck:
    k_req = spin.integration_substeps(vcfg)
    cap = VALIDATE_SUBSTEP_CAP if max_substeps is None else max_substeps
    k = max(1, min(k_req, cap))
    dt = 1.0 / (vcfg.fs * k)
    duration = (spin.TRANSIENT_LIFETIMES + 6.0) / vcfg.gamma_relax
    traj = spin.integrate_spin(vcfg, duration, dt, discard_transient=True,
                               check_step=False)
    amp = abs(spin.demodulated_fundamental(
        traj, math.copysign(vcfg.raw.pump.mod_freq, vcfg.omega_l)))
    ref = spin.rwa_steady_state(vcfg).amplitude
    dev = abs(amp / ref - 1.0)
    limited = k < k_req
    detail = (f"fundamental amplitude vs closed form, {k} substeps"
              + (f" (capped below the required {k_req})" if limited else ""))
    return ValidationCheck("integrator-vs-rwa", dev <= RWA_CHECK_TOL,
                           dev, RWA_CHECK_TOL, detail)


def _check_lockin_tone(vcfg: ValidatedConfig) -> ValidationCheck:
    det = vcfg.raw.detection
    fs = vcfg.fs
    f0 = vcfg.raw.pump.mod_freq
    a0, p0 = 0.01, 0.35
    n = int(round(fs * (dsp.SETTLE_TIME_CONSTANTS * det.lockin_time_constant
                        + 2.0e-3)))
    t = np.arange(n) / fs
    volts = a0 * np.cos(2.0 * np.pi * f0 * t + p0)
    out = dsp.lockin_demodulate(
        dsp.DetectorSeries(sample_rate=fs, volts=volts), f0, 0.0,
        det.lockin_time_constant, det.lockin_filter_order).settled()
    n_avg = max(1, int(round(2.0e-3 * out.sample_rate)))
    x = float(np.mean(out.x[-n_avg:]))
    y = float(np.mean(out.y[-n_avg:]))
    dev = max(abs(math.hypot(x, y) / a0 - 1.0),
              abs(math.atan2(y, x) - p0))
    return ValidationCheck(
        "lockin-tone", dev <= TONE_CHECK_TOL, dev, TONE_CHECK_TOL,
        f"amplitude and phase recovery of a {a0:g} V tone at {f0:g} Hz")


def _check_parseval(vcfg: ValidatedConfig) -> ValidationCheck:
    fs = vcfg.fs
    rng = noise.make_rng(derive_seed_entropy(
        vcfg.raw.detection.rng_seed, "validate/parseval"))
    nperseg, averages = 4096, 64
    x = rng.standard_normal(nperseg * averages)
    spec = dsp.psd_estimate(x, fs, fs / nperseg, averages)
    total = dsp.band_power(spec, 0.0, fs)
    dev = abs(total / float(np.var(x)) - 1.0)
    return ValidationCheck(
        "psd-parseval", dev <= PARSEVAL_CHECK_TOL, dev, PARSEVAL_CHECK_TOL,
        "integrated white-noise PSD vs sample variance")


def _check_loss_arithmetic(_: ValidatedConfig) -> ValidationCheck:
    out_db = variance_to_db(loss_propagated_variance(db_to_variance(-1.9),
                                                     0.90))
    dev = abs(out_db - LOSS_CHECK_EXPECT_DB)
    return ValidationCheck(
        "loss-arithmetic", dev <= LOSS_CHECK_TOL_DB, dev, LOSS_CHECK_TOL_DB,
        f"-1.9 dB squeezing through 90% transmission -> {out_db:.4f} dB")


def _check_determinism(vcfg: ValidatedConfig) -> ValidationCheck:
    model = noise.build_noise_model(vcfg, squeezed=True)
    seed = derive_seed_entropy(vcfg.raw.detection.rng_seed,
                               "validate/determinism")
    runs = [noise.synthesize_probe_noise(model, 4096, vcfg.fs, seed,
                                         carrier_freq=vcfg.raw.pump.mod_freq)
            for _ in range(2)]
    digests = [hashlib.sha256(r.samples.tobytes()).hexdigest() for r in runs]
    same = digests[0] == digests[1]
    return ValidationCheck(
        "determinism", same, 0.0 if same else 1.0, 0.0,
        "same seed twice -> byte-identical noise synthesis")


def validate(vcfg: ValidatedConfig,
             max_substeps: int | None = None) -> ValidationReport:
    """Self-check suite; check failures become report entries, not raises."""
    suite = (
        ("integrator-vs-rwa", lambda c: _check_integrator(c, max_substeps)),
        ("lockin-tone", _check_lockin_tone),
        ("psd-parseval", _check_parseval),
        ("loss-arithmetic", _check_loss_arithmetic),
        ("determinism", _check_determinism),
    )
    checks = []
    for name, fn in suite:
        try:
            checks.append(fn(vcfg))
        except Exception as exc:  # noqa: BLE001 - report, never raise
            checks.append(ValidationCheck(name, False, math.nan, math.nan,
                                          f"check aborted: {exc}"))
    return ValidationReport(checks=tuple(checks))


def _run_validate(vcfg: ValidatedConfig, art: _ArtifactSet,
                  max_substeps: int | None = None) -> dict:
    report = validate(vcfg, max_substeps)
    lines = [f"# {k}: {v}" for k, v in art.base_header().items()]
    for c in report.checks:
        lines.append(f"{'PASS' if c.passed else 'FAIL'} {c.name}: "
                     f"measured {c.measured:.6g} (tolerance {c.tolerance:g}) "
                     f"- {c.detail}")
    lines.append(f"overall: {'PASS' if report.passed else 'FAIL'}")
    art.write_text("validation.txt", "\n".join(lines) + "\n")
    return {"passed": report.passed,
            "checks": {c.name: c.passed for c in report.checks},
            "lines": lines[len(art.base_header()):]}


_RUNNERS = {
    "dc-sweep": _run_dc_sweep,
    "lockin-sweep": _run_lockin_sweep,
    "sa-compare": _run_sa_compare,
    "sensitivity": _run_sensitivity,
    "temp-scan": _run_temp_scan,
    "validate": _run_validate,
}


def run_scenario(scenario: Scenario, **runner_kwargs) -> RunManifest:
    """Run a named scenario: validate config, write artifacts, then the
    manifest (always last). Partial outputs are removed on failure."""
    if scenario.name not in _RUNNERS:
        raise ConfigError([("scenario",
                            f"unknown scenario {scenario.name!r}; expected "
                            f"one of {', '.join(SCENARIO_NAMES)}")])
    cfg = apply_overrides(scenario.config, scenario.overrides)
    vcfg = validate_config(cfg)
    os.makedirs(scenario.output_dir, exist_ok=True)
    art = _ArtifactSet(scenario.output_dir, vcfg, scenario.name)
    started = time.time()
    try:
        summary = _RUNNERS[scenario.name](vcfg, art, **runner_kwargs)
    except BaseException:
        art.discard()
        raise
    started_s, finished_s = _manifest_times(started, time.time())
    manifest = RunManifest(scenario=scenario.name,
                           config_hash=vcfg.config_hash,
                           seed=vcfg.raw.detection.rng_seed,
                           tool_version=TOOL_VERSION,
                           started_utc=started_s, finished_utc=finished_s,
                           artifacts=art.digests(), summary=summary)
    with open(os.path.join(scenario.output_dir, "manifest.txt"), "w",
              encoding="utf-8") as fh:
        fh.write(manifest.to_text())
    return manifest
