"""Detection chain: polarimeter output, lock-in, spectra.

Lock-in convention (amplitude, not RMS): an input A*cos(2 pi f_ref t + phi0)
demodulated at reference phase p settles to X = A*cos(phi0 - p) and
Y = A*sin(phi0 - p). The low-pass is a cascade of `order` identical
single-pole stages of time constant tau, so an offset tone at f_ref + delta
is attenuated by (1 + (2 pi delta tau)^2)^(-order/2). PSDs are one-sided
densities (Welch, Hann default, per-segment mean removed) normalized so the
integral over frequency returns the series variance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.signal import welch

from . import kernels
from .config import FILTER_ORDERS
from .core import ConfigError, DataError
from .noise import NoiseSeries

DB_REFERENCE_PSD = 1.0        # V^2/Hz; 0 dB on spectrum-analyzer traces
SETTLE_TIME_CONSTANTS = 10.0  # lock-in output discarded before this


@dataclass(frozen=True)
class DetectorSeries:
    sample_rate: float
    volts: np.ndarray

    @property
    def n(self) -> int:
        return self.volts.shape[0]


@dataclass(frozen=True)
class LockinOutput:
    sample_rate: float       # after any decimation
    x: np.ndarray
    y: np.ndarray
    ref_freq: float
    phase: float
    time_constant: float
    filter_order: int

    @property
    def r(self) -> np.ndarray:
        return np.hypot(self.x, self.y)

    def settled(self) -> "LockinOutput":
        """Drop the first SETTLE_TIME_CONSTANTS*tau of output."""
        skip = math.ceil(SETTLE_TIME_CONSTANTS * self.time_constant
                         * self.sample_rate)
        if skip >= self.x.shape[0]:
            raise DataError("series shorter than the lock-in settling time")
        return replace(self, x=self.x[skip:], y=self.y[skip:])


@dataclass(frozen=True)
class Spectrum:
    freqs: np.ndarray
    values: np.ndarray
    kind: str                # "psd" (V^2/Hz) or "asd" (V/sqrt(Hz))
    rbw: float
    averages: int
    window: str = "hann"
    vbw: float | None = None
    meta: dict = field(default_factory=dict)

    @property
    def df(self) -> float:
        return float(self.freqs[1] - self.freqs[0])

    def in_band(self, f_lo: float, f_hi: float) -> "Spectrum":
        m = (self.freqs >= f_lo) & (self.freqs <= f_hi)
        if not m.any():
            raise DataError(f"no spectrum bins in [{f_lo:g}, {f_hi:g}] Hz")
        return replace(self, freqs=self.freqs[m], values=self.values[m])

    def to_asd(self) -> "Spectrum":
        if self.kind == "asd":
            return self
        return replace(self, values=np.sqrt(self.values), kind="asd")


def assemble_detector_output(rotation_rad, sample_rate: float,
                             noise: NoiseSeries | None,
                             gain: float) -> DetectorSeries:
    """Polarimeter voltage v = gain * (phi + n) from rotation and noise."""
    phi = np.asarray(rotation_rad, dtype=float)
    if noise is not None:
        if noise.sample_rate != sample_rate:
            raise DataError(
                f"noise sample rate {noise.sample_rate:g} S/s does not match "
                f"signal rate {sample_rate:g} S/s")
        if noise.samples.shape[0] != phi.shape[0]:
            raise DataError(
                f"noise length {noise.samples.shape[0]} does not match signal "
                f"length {phi.shape[0]}")
        phi = phi + noise.samples
    return DetectorSeries(sample_rate=sample_rate, volts=gain * phi)


class LockinStream:
    """Chunked dual-phase demodulator carrying filter state across pushes.

    Filter stages initialize at the first mixed sample; output may be
    decimated after filtering (the cascade is the anti-alias filter).
    """

    def __init__(self, sample_rate: float, ref_freq: float, phase: float,
                 time_constant: float, order: int, decimate: int = 1):
        if order not in FILTER_ORDERS:
            raise ConfigError([("detection.lockin_filter_order",
                                f"must be one of {FILTER_ORDERS}, got {order!r}")])
        if ref_freq >= sample_rate / 2.0:
            raise DataError(
                f"reference {ref_freq:g} Hz is not below Nyquist "
                f"({sample_rate / 2.0:g} Hz)")
        if time_constant <= 0:
            raise ConfigError([("detection.lockin_time_constant",
                                "must be > 0 s")])
        if decimate < 1:
            raise ValueError("decimate must be >= 1")
        self.fs = sample_rate
        self.ref_freq = ref_freq
        self.phase = phase
        self.tau = time_constant
        self.order = order
        self.decimate = decimate
        self.alpha = 1.0 - math.exp(-1.0 / (sample_rate * time_constant))
        self._state_x: np.ndarray | None = None
        self._state_y: np.ndarray | None = None
        self._n_seen = 0

    def push(self, volts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        v = np.asarray(volts, dtype=float)
        m = v.shape[0]
        idx = self._n_seen + np.arange(m)
        arg = (2.0 * np.pi * self.ref_freq / self.fs) * idx + self.phase
        xm = 2.0 * v * np.cos(arg)
        ym = -2.0 * v * np.sin(arg)
        if self._state_x is None:
            self._state_x = np.full(self.order, xm[0] if m else 0.0)
            self._state_y = np.full(self.order, ym[0] if m else 0.0)
        x = kernels.iir_cascade(xm, self.alpha, self._state_x)
        y = kernels.iir_cascade(ym, self.alpha, self._state_y)
        if self.decimate > 1:
            first = (self.decimate - 1 - (self._n_seen % self.decimate)) % self.decimate
            x = x[first::self.decimate]
            y = y[first::self.decimate]
        self._n_seen += m
        return x, y


def lockin_demodulate(series: DetectorSeries, ref_freq: float, phase: float,
                      time_constant: float, order: int,
                      decimate: int = 1) -> LockinOutput:
    """Demodulate a detector record at ref_freq; see module docstring for the
    amplitude/phase convention."""
    stream = LockinStream(series.sample_rate, ref_freq, phase,
                          time_constant, order, decimate)
    x, y = stream.push(series.volts)
    return LockinOutput(sample_rate=series.sample_rate / decimate, x=x, y=y,
                        ref_freq=ref_freq, phase=phase,
                        time_constant=time_constant, filter_order=order)


def rotate_xy(x, y, dphase: float) -> tuple[np.ndarray, np.ndarray]:
    """(X, Y) measured at phase p re-expressed at phase p + dphase."""
    c, s = math.cos(dphase), math.sin(dphase)
    return c * x + s * y, c * y - s * x


def _crossing_slope(b: np.ndarray, v: np.ndarray) -> tuple[float, float] | None:
    """Steepest zero crossing of v(b): returns (b_cross, local slope)."""
    prod = v[:-1] * v[1:]
    cells = np.nonzero(prod < 0.0)[0]
    if cells.size == 0:
        return None
    slopes = (v[cells + 1] - v[cells]) / (b[cells + 1] - b[cells])
    k = int(np.argmax(np.abs(slopes)))
    i = cells[k]
    b0 = b[i] - v[i] * (b[i + 1] - b[i]) / (v[i + 1] - v[i])
    return float(b0), float(slopes[k])


def auto_phase(b_grid, x, y) -> float:
    """Reference phase that makes X purely dispersive across the resonance.

    Input is a sweep of (X, Y) taken at phase 0. The resonance is located by
    a parabolic fit to R = hypot(X, Y) around its peak; the demodulated phase
    there, plus pi/2, rotates the response fully into the quadrature whose
    zero crossing marks the resonance. Robust to coarse sweep grids, unlike
    maximizing the interpolated crossing slope.
    """
    b = np.asarray(b_grid, dtype=float)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if not (b.shape == x.shape == y.shape) or b.size < 3:
        raise DataError("sweep arrays must match and hold at least 3 points")
    r = np.hypot(x, y)
    k = int(np.clip(np.argmax(r), 1, b.size - 2))
    denom = r[k - 1] - 2.0 * r[k] + r[k + 1]
    frac = 0.5 * (r[k - 1] - r[k + 1]) / denom if denom < 0.0 else 0.0
    frac = float(np.clip(frac, -1.0, 1.0))
    phi = np.unwrap(np.arctan2(y[k - 1:k + 2], x[k - 1:k + 2]))
    # quadratic interpolation of the unwrapped phase at the peak position
    phi_hat = (phi[1] + frac * 0.5 * (phi[2] - phi[0])
               + 0.5 * frac * frac * (phi[0] - 2.0 * phi[1] + phi[2]))
    return float(math.remainder(phi_hat + math.pi / 2.0, 2.0 * math.pi))


def psd_estimate(series, sample_rate: float, segment_bandwidth: float,
                 averages: int, window: str = "hann") -> Spectrum:
    """Averaged one-sided PSD with bin width segment_bandwidth.

    Non-overlapping segments; exactly `averages` of them are consumed, so the
    series must hold at least averages * (sample_rate/segment_bandwidth)
    samples.
    """
    x = np.asarray(series, dtype=float)
    if segment_bandwidth <= 0 or averages < 1:
        raise ConfigError([("psd", "segment_bandwidth must be > 0 and averages >= 1")])
    nperseg = int(round(sample_rate / segment_bandwidth))
    if nperseg < 8:
        raise ConfigError([("psd", f"segment bandwidth {segment_bandwidth:g} Hz "
                            "leaves fewer than 8 samples per segment")])
    needed = averages * nperseg
    if x.shape[0] < needed:
        raise DataError(f"insufficient data: need {needed} samples for "
                        f"{averages} averages at {segment_bandwidth:g} Hz "
                        f"bins, got {x.shape[0]}")
    freqs, psd = welch(x[:needed], fs=sample_rate, window=window,
                       nperseg=nperseg, noverlap=0, detrend="constant",
                       scaling="density", average="mean")
    return Spectrum(freqs=freqs, values=psd, kind="psd",
                    rbw=sample_rate / nperseg, averages=averages, window=window)


def band_power(spec: Spectrum, f_lo: float, f_hi: float) -> float:
    """Integrated PSD over [f_lo, f_hi] in V^2."""
    if spec.kind != "psd":
        raise DataError("band_power expects a PSD")
    sub = spec.in_band(f_lo, f_hi)
    return float(np.sum(sub.values) * spec.df)


def tone_amplitude(spec: Spectrum, freq: float, half_width_bins: int = 4) -> float:
    """Amplitude of a sinusoid from its integrated spectral peak.

    Integrating the windowed peak over its main lobe returns the tone power
    A^2/2 regardless of window coherent gain, so A = sqrt(2 * sum * df).
    """
    lo = freq - half_width_bins * spec.rbw
    hi = freq + half_width_bins * spec.rbw
    return math.sqrt(max(0.0, 2.0 * band_power(spec, lo, hi)))


def sa_trace(series, sample_rate: float, rbw: float, vbw: float,
             center: float | None = None,
             span: float | None = None) -> Spectrum:
    """Spectrum-analyzer style trace: PSD at bin width rbw, video averaging
    emulated by ~rbw/vbw trace averages. Values stay linear (V^2/Hz);
    rendering in dB is relative to DB_REFERENCE_PSD."""
    if vbw > rbw:
        raise ConfigError([("detection.sa_vbw",
                            f"video bandwidth {vbw:g} Hz must not exceed "
                            f"resolution bandwidth {rbw:g} Hz")])
    averages = max(1, int(round(rbw / vbw)))
    spec = psd_estimate(series, sample_rate, rbw, averages)
    spec = replace(spec, vbw=vbw)
    if center is not None and span is not None:
        spec = spec.in_band(center - span / 2.0, center + span / 2.0)
    return spec


def noise_floor_estimate(spec: Spectrum, exclusion_hz: float) -> tuple[float, float]:
    """Median floor of the trace excluding the carrier region.

    The carrier is the maximum bin; bins within exclusion_hz of it are
    dropped. Returns (median, median absolute deviation); at least 10 bins
    must survive.
    """
    f_c = float(spec.freqs[np.argmax(spec.values)])
    mask = np.abs(spec.freqs - f_c) > exclusion_hz
    vals = spec.values[mask]
    if vals.size < 10:
        raise DataError(f"only {vals.size} bins outside the exclusion zone; "
                        "need at least 10 for a floor estimate")
    med = float(np.median(vals))
    mad = float(np.median(np.abs(vals - med)))
    return med, mad


def to_db(values, reference: float = DB_REFERENCE_PSD) -> np.ndarray:
    return 10.0 * np.log10(np.asarray(values, dtype=float) / reference)


def write_spectrum(spec: Spectrum, path, header: dict | None = None,
                   db: bool = False) -> None:
    """Two-column text artifact (Hz, value) with self-describing header."""
    unit = {"psd": "V^2/Hz", "asd": "V/sqrt(Hz)"}[spec.kind]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# amorsim spectrum\n")
        for key, value in (header or {}).items():
            fh.write(f"# {key}: {value}\n")
        fh.write(f"# kind: {spec.kind}\n")
        fh.write(f"# rbw_hz: {spec.rbw:.17g}\n")
        if spec.vbw is not None:
            fh.write(f"# vbw_hz: {spec.vbw:.17g}\n")
        fh.write(f"# averages: {spec.averages}\n")
        fh.write(f"# window: {spec.window}\n")
        if db:
            fh.write(f"# units: dB re {DB_REFERENCE_PSD:g} {unit}\n")
            values = to_db(spec.values)
        else:
            fh.write(f"# units: {unit}\n")
            values = spec.values
        fh.write("# columns: freq_hz value\n")
        for f, v in zip(spec.freqs, values):
            fh.write(f"{f:.17g} {v:.17g}\n")
