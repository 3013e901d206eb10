"""Raw EEG cleaning: mains notch, band-pass, FastICA artifact removal, decimation.

Filters are designed as second-order sections and applied forward-backward
(zero phase), so feature windows downstream stay aligned with the input.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg
import scipy.signal

from .errors import (
    FilterDesignError,
    IcaConvergenceError,
    NonIntegerFactorError,
    RankError,
    ShapeMismatchError,
    TooShortSignalError,
)


@dataclass
class Recording:
    """Multichannel signal, row per channel, values in microvolts."""

    samples: np.ndarray
    sample_rate_hz: float

    def __post_init__(self):
        self.samples = np.ascontiguousarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 2:
            raise ShapeMismatchError(f"recording must be channels x samples, got {self.samples.shape}")
        if not np.isfinite(self.samples).all():
            raise ValueError("recording contains non-finite samples")
        if self.samples.shape[1] < 2 * self.sample_rate_hz:
            raise TooShortSignalError(
                f"recording holds {self.samples.shape[1]} samples, "
                f"need at least 2 s at {self.sample_rate_hz} Hz"
            )

    @property
    def channels(self) -> int:
        return self.samples.shape[0]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]

    @property
    def duration_s(self) -> float:
        return self.n_samples / self.sample_rate_hz


@dataclass(frozen=True)
class FilterCoefficients:
    """Cascaded biquads, scipy sos layout (n_sections, 6)."""

    sos: np.ndarray

    @property
    def order(self) -> int:
        return 2 * self.sos.shape[0]


def design_notch(freq_hz: float, q: float, fs: float) -> FilterCoefficients:
    """Second-order IIR notch: unit gain away from freq_hz, null at freq_hz."""
    if not 0.0 < freq_hz < fs / 2.0:
        raise FilterDesignError(f"notch frequency {freq_hz} Hz outside (0, {fs / 2}) at fs={fs}")
    if q <= 0:
        raise FilterDesignError(f"notch Q must be positive, got {q}")
    b, a = scipy.signal.iirnotch(freq_hz, q, fs=fs)
    return FilterCoefficients(np.hstack([b, a]).reshape(1, 6))


def design_bandpass(lo_hz: float, hi_hz: float, order: int, fs: float) -> FilterCoefficients:
    """Butterworth band-pass as SOS.

    ``order`` is the total pole count and must be even; the analog prototype
    uses order/2 poles, so order 4 yields two biquad sections.
    """
    if not 0.0 < lo_hz < hi_hz < fs / 2.0:
        raise FilterDesignError(f"invalid band ({lo_hz}, {hi_hz}) Hz at fs={fs}")
    if order < 2 or order % 2 != 0:
        raise FilterDesignError(f"band-pass order must be a positive even integer, got {order}")
    sos = scipy.signal.butter(order // 2, [lo_hz, hi_hz], btype="bandpass", fs=fs, output="sos")
    return FilterCoefficients(sos)


def design_lowpass(cutoff_hz: float, order: int, fs: float) -> FilterCoefficients:
    if not 0.0 < cutoff_hz < fs / 2.0:
        raise FilterDesignError(f"cutoff {cutoff_hz} Hz outside (0, {fs / 2}) at fs={fs}")
    sos = scipy.signal.butter(order, cutoff_hz, btype="lowpass", fs=fs, output="sos")
    return FilterCoefficients(sos)


def sos_gain(coeffs: FilterCoefficients, freqs_hz, fs: float, two_pass: bool = False) -> np.ndarray:
    """|H| of the cascade at the given frequencies; squared when two_pass.

    Direct evaluation of each biquad's transfer polynomial at z = e^{j 2 pi f / fs};
    no dependence on the design routine, so tests can use it as an oracle.
    """
    freqs_hz = np.atleast_1d(np.asarray(freqs_hz, dtype=np.float64))
    z = np.exp(-2j * np.pi * freqs_hz / fs)
    h = np.ones_like(z)
    for b0, b1, b2, a0, a1, a2 in coeffs.sos:
        h *= (b0 + b1 * z + b2 * z**2) / (a0 + a1 * z + a2 * z**2)
    mag = np.abs(h)
    return mag**2 if two_pass else mag


def filter_forward_backward(x: np.ndarray, coeffs: FilterCoefficients) -> np.ndarray:
    """Zero-phase filtering: forward pass then reversed pass over the last axis."""
    x = np.asarray(x, dtype=np.float64)
    order = coeffs.order
    if x.shape[-1] <= 3 * order:
        raise TooShortSignalError(
            f"signal of length {x.shape[-1]} too short for zero-phase order-{order} filter"
        )
    return scipy.signal.sosfiltfilt(coeffs.sos, x, axis=-1, padlen=3 * order)


def downsample(rec: Recording, target_hz: float) -> Recording:
    """Anti-aliased integer decimation to target_hz (low-pass at 0.45 x target)."""
    ratio = rec.sample_rate_hz / target_hz
    factor = int(round(ratio))
    if abs(ratio - factor) > 1e-9 or factor < 1:
        raise NonIntegerFactorError(
            f"cannot decimate {rec.sample_rate_hz} Hz to {target_hz} Hz: factor {ratio} is not a positive integer"
        )
    if factor == 1:
        return Recording(rec.samples.copy(), target_hz)
    aa = design_lowpass(0.45 * target_hz, order=8, fs=rec.sample_rate_hz)
    smoothed = filter_forward_backward(rec.samples, aa)
    return Recording(np.ascontiguousarray(smoothed[:, ::factor]), target_hz)


# ---------------------------------------------------------------------------
# FastICA
# ---------------------------------------------------------------------------

@dataclass
class IcaModel:
    """Whitening + rotation learned by FastICA, with per-component kurtosis."""

    mixing: np.ndarray          # channels x components, pseudo-inverse of unmixing
    unmixing: np.ndarray        # components x channels (rotation composed with whitener)
    whitener: np.ndarray        # components x channels
    mean: np.ndarray            # per-channel mean removed before whitening
    component_scores: np.ndarray  # excess kurtosis per component
    rejected: frozenset = field(default_factory=frozenset)
    n_iterations: int = 0

    @property
    def n_components(self) -> int:
        return self.unmixing.shape[0]

    def sources(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        return self.unmixing @ (x - self.mean[:, None])


def _sym_decorrelate(w: np.ndarray) -> np.ndarray:
    # W <- (W W^T)^(-1/2) W
    s, u = scipy.linalg.eigh(w @ w.T)
    s = np.clip(s, 1e-12, None)
    return (u * (1.0 / np.sqrt(s))) @ u.T @ w


def fast_ica(
    x: np.ndarray,
    n_components: int | None = None,
    seed: int = 0,
    max_iter: int = 500,
    tol: float = 1e-6,
) -> IcaModel:
    """Symmetric FastICA with the tanh contrast.

    Deterministic for a given seed. Raises RankError when the input covariance
    is rank deficient and IcaConvergenceError (carrying the iteration count)
    when the weight matrix has not settled within max_iter sweeps.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ShapeMismatchError(f"fast_ica expects channels x samples, got {x.shape}")
    n_ch, n_samp = x.shape
    if n_samp < 10 * n_ch:
        raise TooShortSignalError(f"fast_ica needs >= 10 samples per channel, got {n_samp} for {n_ch}")
    if n_components is None:
        n_components = n_ch
    if not 1 <= n_components <= n_ch:
        raise ShapeMismatchError(f"n_components {n_components} outside [1, {n_ch}]")

    mean = x.mean(axis=1)
    xc = x - mean[:, None]

    cov = (xc @ xc.T) / n_samp
    evals, evecs = scipy.linalg.eigh(cov)
    order = np.argsort(evals)[::-1]
    evals, evecs = evals[order], evecs[:, order]
    if evals[n_components - 1] <= max(evals[0], 1.0) * 1e-12:
        raise RankError(
            f"input covariance is rank deficient: eigenvalue {evals[n_components - 1]:.3e} "
            f"for component {n_components}"
        )
    whitener = (evecs[:, :n_components] / np.sqrt(evals[:n_components])).T
    z = whitener @ xc  # unit-variance, decorrelated

    rng = np.random.default_rng(seed)
    w = _sym_decorrelate(rng.standard_normal((n_components, n_components)))

    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        wz = w @ z
        g = np.tanh(wz)
        g_prime = (1.0 - g**2).mean(axis=1)
        w_new = _sym_decorrelate((g @ z.T) / n_samp - g_prime[:, None] * w)
        delta = np.max(np.abs(np.abs(np.einsum("ij,ij->i", w_new, w)) - 1.0))
        w = w_new
        if delta < tol:
            converged = True
            break
    if not converged:
        raise IcaConvergenceError(
            f"FastICA did not converge within {max_iter} iterations", iterations=max_iter
        )

    unmixing = w @ whitener
    mixing = np.linalg.pinv(unmixing)
    comps = w @ z
    m2 = (comps**2).mean(axis=1)
    kurt = (comps**4).mean(axis=1) / m2**2 - 3.0
    return IcaModel(
        mixing=mixing,
        unmixing=unmixing,
        whitener=whitener,
        mean=mean,
        component_scores=kurt,
        n_iterations=iterations,
    )


def auto_reject_indices(model: IcaModel, kurtosis_threshold: float = 8.0) -> frozenset:
    """Components whose |excess kurtosis| marks them as artifact-like."""
    return frozenset(int(i) for i in np.flatnonzero(np.abs(model.component_scores) > kurtosis_threshold))


def remove_components(x: np.ndarray, model: IcaModel, rejected) -> np.ndarray:
    """Reconstruct x from the non-rejected independent components."""
    x = np.asarray(x, dtype=np.float64)
    rejected = frozenset(int(i) for i in rejected)
    bad = [i for i in rejected if not 0 <= i < model.n_components]
    if bad:
        raise IndexError(f"rejected component indices {sorted(bad)} outside [0, {model.n_components})")
    comps = model.sources(x)
    if rejected:
        comps = comps.copy()
        comps[sorted(rejected), :] = 0.0
    return model.mixing @ comps + model.mean[:, None]


# ---------------------------------------------------------------------------
# Cleaning chain
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PreprocessConfig:
    notch: bool = True
    notch_freq_hz: float = 50.0
    notch_q: float = 30.0
    bandpass: bool = True
    bandpass_lo_hz: float = 4.0
    bandpass_hi_hz: float = 45.0
    bandpass_order: int = 4
    ica: bool = False
    ica_reject: str = "none"  # "none" | "auto", or explicit indices via ica_reject_indices
    ica_reject_indices: tuple = ()
    ica_seed: int = 0
    target_hz: float = 128.0


def preprocess(rec: Recording, cfg: PreprocessConfig = PreprocessConfig()) -> Recording:
    """Notch -> band-pass -> ICA -> downsample, each stage optional.

    Downsampling is skipped when the recording is already at target_hz.
    """
    out = rec
    if cfg.notch:
        notch = design_notch(cfg.notch_freq_hz, cfg.notch_q, out.sample_rate_hz)
        out = replace(out, samples=filter_forward_backward(out.samples, notch))
    if cfg.bandpass:
        bp = design_bandpass(cfg.bandpass_lo_hz, cfg.bandpass_hi_hz, cfg.bandpass_order, out.sample_rate_hz)
        out = replace(out, samples=filter_forward_backward(out.samples, bp))
    if cfg.ica:
        model = fast_ica(out.samples, seed=cfg.ica_seed)
        if cfg.ica_reject == "auto":
            rejected = auto_reject_indices(model)
        elif cfg.ica_reject_indices:
            rejected = frozenset(cfg.ica_reject_indices)
        else:
            rejected = frozenset()
        out = replace(out, samples=remove_components(out.samples, model, rejected))
    if out.sample_rate_hz != cfg.target_hz:
        out = downsample(out, cfg.target_hz)
    return out
