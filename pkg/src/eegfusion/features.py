"""Differential-entropy and Welch PSD features on sliding 2 s windows.

A 60 s, 128 Hz trial turns into a channels x 5 bands x 60 frames cube:
2 s windows hop by 1 s, the last window borrowing 1 s of reflected tail.
DE is the Gaussian closed form 0.5*ln(2*pi*e*var) in nats on band-filtered
windows; PSD is the averaged windowed periodogram, band-averaged over a
0.5 Hz bin grid in uV^2/Hz.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dsp import Recording, design_bandpass, filter_forward_backward
from .errors import (
    DegenerateWindowError,
    EmptyBandError,
    ShapeMismatchError,
    TooShortSignalError,
)


@dataclass(frozen=True)
class Band:
    name: str
    lo_hz: float
    hi_hz: float


# Order is meaningful: the band axis of every cube follows this table.
BANDS = (
    Band("theta", 4.0, 7.0),
    Band("alpha", 8.0, 10.0),
    Band("slow_alpha", 8.0, 13.0),
    Band("beta", 14.0, 29.0),
    Band("gamma", 30.0, 45.0),
)


@dataclass(frozen=True)
class FrameSpec:
    window_s: float = 2.0
    hop_s: float = 1.0
    frames_per_trial: int = 60

    def window_samples(self, fs: float) -> int:
        win = self.window_s * fs
        if abs(win - round(win)) > 1e-9 or round(win) % 2 != 0:
            raise ShapeMismatchError(f"window {self.window_s} s at {fs} Hz is not an even sample count")
        return int(round(win))

    def hop_samples(self, fs: float) -> int:
        hop = self.hop_s * fs
        if abs(hop - round(hop)) > 1e-9 or round(hop) < 1:
            raise ShapeMismatchError(f"hop {self.hop_s} s at {fs} Hz is not a whole sample count")
        return int(round(hop))


@dataclass(frozen=True)
class WelchConfig:
    segment_len: int = 256
    overlap: int = 128
    nfft: int = 256
    sample_rate_hz: float = 128.0

    def __post_init__(self):
        if not 0 <= self.overlap < self.segment_len:
            raise ShapeMismatchError(f"overlap {self.overlap} must be in [0, {self.segment_len})")
        if self.nfft < self.segment_len:
            raise ShapeMismatchError(f"nfft {self.nfft} smaller than segment {self.segment_len}")

    @property
    def window(self) -> np.ndarray:
        return np.hanning(self.segment_len)

    @property
    def window_norm(self) -> float:
        """Sum of squared window samples; the periodogram divisor."""
        w = self.window
        return float(np.sum(w * w))

    @property
    def freq_resolution_hz(self) -> float:
        return self.sample_rate_hz / self.nfft

    def freqs(self) -> np.ndarray:
        return np.arange(self.nfft // 2 + 1) * self.freq_resolution_hz


@dataclass
class FeatureCube:
    """channels x bands x frames block of DE (nats) or PSD (uV^2/Hz) values."""

    kind: str  # "DE" | "PSD" | "FUSED"
    values: np.ndarray

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=np.float64)
        if self.kind not in ("DE", "PSD", "FUSED"):
            raise ValueError(f"unknown cube kind {self.kind!r}")
        if self.values.ndim != 3 or self.values.shape[1] != len(BANDS):
            raise ShapeMismatchError(
                f"cube must be channels x {len(BANDS)} bands x frames, got {self.values.shape}"
            )
        if not np.isfinite(self.values).all():
            raise ValueError(f"{self.kind} cube contains non-finite values")
        if self.kind == "PSD" and (self.values < 0).any():
            raise ValueError("PSD cube contains negative values")

    @property
    def shape(self):
        return self.values.shape


def de_per_window(x: np.ndarray) -> float:
    """Differential entropy of one band-filtered window, Gaussian closed form, in nats."""
    x = np.asarray(x, dtype=np.float64)
    var = float(np.var(x, ddof=1))
    if var <= 0.0 or np.ptp(x) == 0.0:  # ptp catches constants despite mean round-off
        raise DegenerateWindowError("window has zero sample variance; DE is undefined")
    return 0.5 * math.log(2.0 * math.pi * math.e * var)


def welch_psd(x: np.ndarray, cfg: WelchConfig = WelchConfig()) -> np.ndarray:
    """One-sided Welch PSD over the last axis, in power per Hz.

    Splits the signal into Hanning-windowed segments (hop = segment - overlap),
    averages the per-segment periodograms |F_k|^2 / W, scales by 1/fs, and
    doubles the interior bins of the one-sided spectrum.
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[-1]
    if n < cfg.segment_len:
        raise TooShortSignalError(f"signal length {n} shorter than Welch segment {cfg.segment_len}")
    hop = cfg.segment_len - cfg.overlap
    segments = np.lib.stride_tricks.sliding_window_view(x, cfg.segment_len, axis=-1)[..., ::hop, :]
    spectra = np.fft.rfft(segments * cfg.window, n=cfg.nfft, axis=-1)
    psd = (np.abs(spectra) ** 2 / cfg.window_norm).mean(axis=-2) / cfg.sample_rate_hz
    if cfg.nfft % 2 == 0:
        psd[..., 1:-1] *= 2.0  # DC and Nyquist stay single-sided
    else:
        psd[..., 1:] *= 2.0
    return psd


def band_average(spectrum: np.ndarray, band, freqs: np.ndarray) -> float:
    """Mean of the PSD bins whose center frequency lies inside [lo, hi]."""
    lo, hi = (band.lo_hz, band.hi_hz) if isinstance(band, Band) else band
    freqs = np.asarray(freqs, dtype=np.float64)
    mask = (freqs >= lo) & (freqs <= hi)
    if not mask.any():
        raise EmptyBandError(f"no PSD bins inside band ({lo}, {hi}) Hz")
    return float(np.asarray(spectrum, dtype=np.float64)[mask].mean())


def _frame_windows(x: np.ndarray, fs: float, frames: FrameSpec) -> np.ndarray:
    """(channels, frames, window) view of a trial, reflect-padded for the final frame."""
    win = frames.window_samples(fs)
    hop = frames.hop_samples(fs)
    needed = (frames.frames_per_trial - 1) * hop + win
    if x.shape[-1] > needed:
        raise ShapeMismatchError(
            f"trial of {x.shape[-1]} samples yields more than {frames.frames_per_trial} frames"
        )
    pad = needed - x.shape[-1]
    if pad >= x.shape[-1]:
        raise TooShortSignalError(f"trial of {x.shape[-1]} samples too short for {frames.frames_per_trial} frames")
    if pad:
        x = np.pad(x, [(0, 0)] * (x.ndim - 1) + [(0, pad)], mode="reflect")
    return np.lib.stride_tricks.sliding_window_view(x, win, axis=-1)[..., ::hop, :]


def extract_cube(
    rec: Recording,
    kind: str,
    bands=BANDS,
    frames: FrameSpec = FrameSpec(),
    band_order: int = 4,
) -> FeatureCube:
    """Per-channel, per-band, per-frame feature cube from a preprocessed trial.

    DE band-filters each channel (zero phase) and applies the Gaussian closed
    form per window; PSD runs per-window Welch on the broadband signal and
    averages the bins of each band.
    """
    fs = rec.sample_rate_hz
    win = frames.window_samples(fs)
    if kind == "DE":
        per_band = []
        for band in bands:
            coeffs = design_bandpass(band.lo_hz, band.hi_hz, band_order, fs)
            filtered = filter_forward_backward(rec.samples, coeffs)
            windows = _frame_windows(filtered, fs, frames)  # (C, F, win)
            var = windows.var(axis=-1, ddof=1)
            if (var <= 0.0).any() or (np.ptp(windows, axis=-1) == 0.0).any():
                raise DegenerateWindowError(
                    f"zero-variance window in band {band.name}; DE is undefined"
                )
            per_band.append(0.5 * np.log(2.0 * math.pi * math.e * var))
        values = np.stack(per_band, axis=1)  # (C, B, F)
    elif kind == "PSD":
        cfg = WelchConfig(segment_len=win, overlap=win // 2, nfft=win, sample_rate_hz=fs)
        windows = _frame_windows(rec.samples, fs, frames)  # (C, F, win)
        spectra = welch_psd(windows, cfg)  # (C, F, bins)
        freqs = cfg.freqs()
        per_band = []
        for band in bands:
            mask = (freqs >= band.lo_hz) & (freqs <= band.hi_hz)
            if not mask.any():
                raise EmptyBandError(f"no PSD bins inside band ({band.lo_hz}, {band.hi_hz}) Hz")
            per_band.append(spectra[..., mask].mean(axis=-1))
        values = np.stack(per_band, axis=1)
    else:
        raise ValueError(f"extract_cube kind must be 'DE' or 'PSD', got {kind!r}")
    return FeatureCube(kind, values)


def segment_cube(cube: FeatureCube, segment_frames: int = 3) -> list[np.ndarray]:
    """Split the 60-frame cube into 20 consecutive channels x bands x 3 blocks."""
    values = cube.values
    n_frames = values.shape[2]
    if n_frames % segment_frames != 0:
        raise ShapeMismatchError(f"frame axis {n_frames} not divisible into blocks of {segment_frames}")
    n_blocks = n_frames // segment_frames
    return [
        np.ascontiguousarray(values[:, :, i * segment_frames:(i + 1) * segment_frames])
        for i in range(n_blocks)
    ]
