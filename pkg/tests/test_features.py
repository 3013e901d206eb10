import math

import numpy as np
import pytest

from eegfusion.dsp import Recording
from eegfusion.errors import (
    DegenerateWindowError,
    EmptyBandError,
    ShapeMismatchError,
    TooShortSignalError,
)
from eegfusion.features import (
    BANDS,
    FeatureCube,
    FrameSpec,
    WelchConfig,
    band_average,
    de_per_window,
    extract_cube,
    segment_cube,
    welch_psd,
)

FS = 128.0
GAUSS_DE = 0.5 * math.log(2.0 * math.pi * math.e)  # ~1.4189 nats at unit variance


def make_recording(signal_rows):
    return Recording(np.asarray(signal_rows, dtype=np.float64), FS)


# ---------------------------------------------------------------------------
# Differential entropy
# ---------------------------------------------------------------------------

def test_de_matches_gaussian_closed_form():
    rng = np.random.default_rng(42)
    windows = rng.standard_normal((10_000, 256))
    des = [de_per_window(w) for w in windows[:100]]
    # vectorised mean over all 10k windows via the same formula
    var = windows.var(axis=1, ddof=1)
    mean_de = float(np.mean(0.5 * np.log(2 * math.pi * math.e * var)))
    assert abs(mean_de - GAUSS_DE) < 0.02
    np.testing.assert_allclose(des[:5], 0.5 * np.log(2 * math.pi * math.e * var[:5]), rtol=1e-12)


def test_de_sigma_scaling_is_exact_per_window():
    rng = np.random.default_rng(1)
    w = rng.standard_normal(256)
    assert abs((de_per_window(2.0 * w) - de_per_window(w)) - math.log(2.0)) < 1e-12


def test_de_average_shift_between_sigmas():
    rng = np.random.default_rng(2)
    windows = rng.standard_normal((10_000, 256))
    d1 = 0.5 * np.log(2 * math.pi * math.e * windows.var(axis=1, ddof=1))
    d2 = 0.5 * np.log(2 * math.pi * math.e * (2.0 * windows).var(axis=1, ddof=1))
    assert abs(float(np.mean(d2 - d1)) - math.log(2.0)) < 0.02


def test_de_rejects_constant_window():
    with pytest.raises(DegenerateWindowError):
        de_per_window(np.full(256, 1.7))


# ---------------------------------------------------------------------------
# Welch PSD
# ---------------------------------------------------------------------------

def test_welch_parseval_sine():
    cfg = WelchConfig(sample_rate_hz=FS)
    t = np.arange(int(60 * FS)) / FS
    x = np.sin(2 * np.pi * 16.0 * t)
    psd = welch_psd(x, cfg)
    integrated = psd.sum() * cfg.freq_resolution_hz
    assert abs(integrated - x.var()) <= 0.05 * x.var()


def test_welch_sine_peak_bin():
    cfg = WelchConfig(sample_rate_hz=FS)
    t = np.arange(int(60 * FS)) / FS
    psd = welch_psd(np.sin(2 * np.pi * 16.0 * t), cfg)
    assert cfg.freqs()[int(np.argmax(psd))] == 16.0


def test_welch_parseval_white_noise():
    cfg = WelchConfig(sample_rate_hz=FS)
    rng = np.random.default_rng(7)
    x = rng.standard_normal(int(60 * FS))
    psd = welch_psd(x, cfg)
    integrated = psd.sum() * cfg.freq_resolution_hz
    assert abs(integrated - x.var()) <= 0.05 * x.var()


def test_welch_zero_signal():
    cfg = WelchConfig(sample_rate_hz=FS)
    np.testing.assert_array_equal(welch_psd(np.zeros(7680), cfg), np.zeros(129))


def test_welch_nonnegative_and_scaling():
    cfg = WelchConfig(sample_rate_hz=FS)
    rng = np.random.default_rng(8)
    x = rng.standard_normal(2048)
    psd = welch_psd(x, cfg)
    assert (psd >= 0).all()
    np.testing.assert_allclose(welch_psd(2.0 * x, cfg), 4.0 * psd, rtol=1e-12)


def test_welch_too_short():
    with pytest.raises(TooShortSignalError):
        welch_psd(np.zeros(100), WelchConfig(sample_rate_hz=FS))


# ---------------------------------------------------------------------------
# Band averaging
# ---------------------------------------------------------------------------

def test_band_average_flat_spectrum():
    cfg = WelchConfig(sample_rate_hz=FS)
    flat = np.full(129, 2.5)
    for band in BANDS:
        assert band_average(flat, band, cfg.freqs()) == pytest.approx(2.5)


def test_band_average_tone_placement():
    cfg = WelchConfig(sample_rate_hz=FS)
    t = np.arange(int(60 * FS)) / FS
    psd = welch_psd(np.sin(2 * np.pi * 16.0 * t), cfg)
    freqs = cfg.freqs()
    beta = band_average(psd, (14.0, 29.0), freqs)
    theta = band_average(psd, (4.0, 7.0), freqs)
    assert beta / max(theta, 1e-300) > 100.0


def test_band_bin_count_on_half_hz_grid():
    freqs = WelchConfig(sample_rate_hz=FS).freqs()
    assert int(((freqs >= 4.0) & (freqs <= 7.0)).sum()) == 7


def test_band_average_empty_band():
    freqs = WelchConfig(sample_rate_hz=FS).freqs()
    with pytest.raises(EmptyBandError):
        band_average(np.ones(129), (4.1, 4.4), freqs)


# ---------------------------------------------------------------------------
# Cube extraction
# ---------------------------------------------------------------------------

def test_cube_shape_is_channels_bands_frames():
    rng = np.random.default_rng(0)
    rec = make_recording(rng.standard_normal((32, 7680)))
    for kind in ("DE", "PSD"):
        assert extract_cube(rec, kind).shape == (32, 5, 60)


def test_psd_cube_alpha_peak_for_9hz_tone():
    t = np.arange(7680) / FS
    rng = np.random.default_rng(1)
    rows = np.tile(np.sin(2 * np.pi * 9.0 * t), (8, 1)) + 1e-6 * rng.standard_normal((8, 7680))
    cube = extract_cube(make_recording(rows), "PSD")
    assert (cube.values.argmax(axis=1) == 1).all()  # alpha (8-10) is band index 1


def test_de_cube_stationary_input_is_flat_over_frames():
    rng = np.random.default_rng(3)
    rec = make_recording(200.0 * rng.standard_normal((8, 7680)))
    cube = extract_cube(rec, "DE")
    rel = cube.values.var(axis=2) / np.abs(cube.values.mean(axis=2))
    assert rel.max() <= 0.05


def test_de_cube_amplitude_scaling_shifts_by_ln_c():
    rng = np.random.default_rng(4)
    rows = rng.standard_normal((4, 7680))
    a = extract_cube(make_recording(rows), "DE")
    b = extract_cube(make_recording(2.0 * rows), "DE")
    np.testing.assert_allclose(b.values - a.values, math.log(2.0), atol=1e-9)


def test_psd_cube_amplitude_scaling_is_quadratic():
    rng = np.random.default_rng(5)
    rows = rng.standard_normal((4, 7680))
    a = extract_cube(make_recording(rows), "PSD")
    b = extract_cube(make_recording(2.0 * rows), "PSD")
    np.testing.assert_allclose(b.values, 4.0 * a.values, rtol=1e-12)


def test_extract_rejects_all_zero_trial():
    with pytest.raises((DegenerateWindowError, TooShortSignalError)):
        extract_cube(make_recording(np.zeros((2, 7680))), "DE")


def test_frame_spec_validation():
    spec = FrameSpec()
    assert spec.window_samples(FS) == 256
    assert spec.hop_samples(FS) == 128
    with pytest.raises(ShapeMismatchError):
        FrameSpec(window_s=0.7).window_samples(10.0)


# ---------------------------------------------------------------------------
# Segmentation
# ---------------------------------------------------------------------------

def test_segment_cube_counts_and_block_zero():
    rng = np.random.default_rng(6)
    cube = FeatureCube("DE", rng.standard_normal((32, 5, 60)))
    blocks = segment_cube(cube)
    assert len(blocks) == 20
    assert all(b.shape == (32, 5, 3) for b in blocks)
    assert np.array_equal(blocks[0], cube.values[:, :, 0:3])


def test_segment_concat_round_trip_bit_exact():
    rng = np.random.default_rng(7)
    cube = FeatureCube("PSD", np.abs(rng.standard_normal((32, 5, 60))))
    blocks = segment_cube(cube)
    assert np.array_equal(np.concatenate(blocks, axis=2), cube.values)


def test_segment_cube_rejects_bad_frame_axis():
    cube = FeatureCube("DE", np.zeros((4, 5, 59)))
    with pytest.raises(ShapeMismatchError):
        segment_cube(cube)


def test_feature_cube_validation():
    with pytest.raises(ValueError):
        FeatureCube("PSD", -np.ones((2, 5, 6)))
    with pytest.raises(ShapeMismatchError):
        FeatureCube("DE", np.zeros((2, 4, 6)))
    with pytest.raises(ValueError):
        FeatureCube("WRONG", np.zeros((2, 5, 6)))
