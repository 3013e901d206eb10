"""Synthetic labelled EEG trials for end-to-end runs without restricted data.

Two generator modes:

separable      -- the high class carries elevated beta/gamma band power over a
                  pink background; a clean sanity benchmark.
complementary  -- both classes share the same jittered beta/gamma power budget;
                  the class is encoded in the beta:gamma power ratio, and a
                  wide per-trial gain jitter plus scale-mismatched features
                  make naive elementwise DE+PSD summation a poor fuser.

Trials are 60 s, 128 Hz, 32 channels; labels are stored as ratings 2.0 / 8.0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .container import Trial

HIGH_RATING = 8.0
LOW_RATING = 2.0


@dataclass(frozen=True)
class SynthConfig:
    mode: str = "separable"  # "separable" | "complementary"
    sample_rate_hz: float = 128.0
    duration_s: float = 60.0
    channels: int = 32
    beta_factor: float = 2.0  # high/low beta power ratio (separable mode)
    # complementary-mode knobs
    comp_amplitude_uv: float = 1.0  # base RMS of the beta/gamma carriers
    comp_ratio: float = 1.4  # high-class beta:gamma power ratio
    comp_jitter_lo: float = 0.5  # per-trial common gain jitter range
    comp_jitter_hi: float = 2.0

    def __post_init__(self):
        if self.mode not in ("separable", "complementary"):
            raise ValueError(f"unknown synth mode {self.mode!r}")


def _shaped_noise(rng, n, fs, shaper) -> np.ndarray:
    """Gaussian noise with the given one-sided amplitude shaping, unit RMS."""
    spec = np.fft.rfft(rng.standard_normal(n))
    freqs = np.fft.rfftfreq(n, 1.0 / fs)
    spec *= shaper(freqs)
    sig = np.fft.irfft(spec, n)
    rms = np.sqrt(np.mean(sig**2))
    return sig / rms if rms > 0 else sig


def _pink(rng, n, fs, rms):
    def shaper(freqs):
        amp = np.zeros_like(freqs)
        amp[1:] = 1.0 / np.sqrt(freqs[1:])
        return amp

    return rms * _shaped_noise(rng, n, fs, shaper)


def _band_noise(rng, n, fs, lo, hi, rms):
    def shaper(freqs):
        return ((freqs >= lo) & (freqs <= hi)).astype(float)

    return rms * _shaped_noise(rng, n, fs, shaper)


def _separable_trial(rng, cfg: SynthConfig, high: bool) -> np.ndarray:
    n = int(round(cfg.duration_s * cfg.sample_rate_hz))
    fs = cfg.sample_rate_hz
    boost = np.sqrt(cfg.beta_factor) if high else 1.0
    gains = 0.8 + 0.4 * np.linspace(0.0, 1.0, cfg.channels)  # mild spatial profile
    rows = []
    for ch in range(cfg.channels):
        row = _pink(rng, n, fs, rms=10.0)
        row += gains[ch] * _band_noise(rng, n, fs, 14.0, 29.0, rms=8.0 * boost)
        row += gains[ch] * _band_noise(rng, n, fs, 30.0, 45.0, rms=4.0 * boost)
        row += _band_noise(rng, n, fs, 4.0, 13.0, rms=5.0)
        rows.append(row)
    return np.asarray(rows)


def _complementary_trial(rng, cfg: SynthConfig, high: bool) -> np.ndarray:
    n = int(round(cfg.duration_s * cfg.sample_rate_hz))
    fs = cfg.sample_rate_hz
    # Per-trial gain jitter spans a wide range so absolute band power carries
    # little class information; the beta:gamma power ratio carries it instead.
    # Amplitudes stay small so DE sits near zero and PSD well under one, which
    # keeps the fused representation in the attention mechanism's soft regime.
    jitter = np.exp(rng.uniform(np.log(cfg.comp_jitter_lo), np.log(cfg.comp_jitter_hi)))
    ratio = cfg.comp_ratio if high else 1.0
    amp = cfg.comp_amplitude_uv
    beta_rms = amp * np.sqrt(jitter * ratio)
    gamma_rms = amp * np.sqrt(jitter)
    rows = []
    for _ in range(cfg.channels):
        row = _pink(rng, n, fs, rms=0.6 * amp)
        row += _band_noise(rng, n, fs, 14.0, 29.0, rms=beta_rms)
        row += _band_noise(rng, n, fs, 30.0, 45.0, rms=gamma_rms)
        row += _band_noise(rng, n, fs, 4.0, 13.0, rms=0.4 * amp)
        rows.append(row)
    return np.asarray(rows)


def generate_trials(
    seed: int,
    n_subjects: int,
    trials_per_subject: int,
    cfg: SynthConfig = SynthConfig(),
) -> list[Trial]:
    """Deterministic labelled trials, classes alternating for exact balance."""
    if n_subjects < 1 or trials_per_subject < 1:
        raise ValueError("n_subjects and trials_per_subject must be >= 1")
    rng = np.random.default_rng(seed)
    make = _separable_trial if cfg.mode == "separable" else _complementary_trial
    trials = []
    for subject in range(1, n_subjects + 1):
        for idx in range(trials_per_subject):
            high = (idx % 2) == 1
            samples = make(rng, cfg, high)
            rating = HIGH_RATING if high else LOW_RATING
            trials.append(
                Trial(
                    subject_id=subject,
                    trial_id=idx,
                    sample_rate_hz=cfg.sample_rate_hz,
                    valence=rating,
                    arousal=rating,
                    samples=samples,
                )
            )
    return trials
