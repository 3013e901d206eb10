"""End-to-end experiment orchestration: container -> features -> fusion -> CNN.

The four feature modes (DE, PSD, SUM, MCA) share preprocessing, framing, and
the seeded stratified split; only the fusion stage differs, which the ablation
driver asserts by comparing split hashes across arms.
"""

from __future__ import annotations

import hashlib
import time
from dataclasses import dataclass, field

import numpy as np

from .container import Trial
from .dsp import PreprocessConfig, Recording, preprocess
from .errors import ConfigError, SingleClassError
from .features import FeatureCube, FrameSpec, extract_cube, segment_cube
from .fusion import fuse_cubes
from .training import Metrics, TrainConfig, evaluate, stratified_split, train

FEATURE_MODES = ("DE", "PSD", "SUM", "MCA")


@dataclass(frozen=True)
class ExperimentConfig:
    target: str = "valence"
    feature_mode: str = "MCA"
    preprocess: PreprocessConfig = field(default_factory=PreprocessConfig)
    frames: FrameSpec = field(default_factory=FrameSpec)
    train: TrainConfig = field(default_factory=TrainConfig)
    zscore_before_fusion: bool = False
    standardize: bool = True
    rating_threshold: float = 5.0

    def __post_init__(self):
        if self.target not in ("valence", "arousal"):
            raise ConfigError(f"target must be valence or arousal, got {self.target!r}")
        if self.feature_mode not in FEATURE_MODES:
            raise ConfigError(f"feature_mode must be one of {FEATURE_MODES}, got {self.feature_mode!r}")


@dataclass
class TrialFeatures:
    de: FeatureCube
    psd: FeatureCube
    label: int


def label_for(trial: Trial, target: str, threshold: float = 5.0) -> int:
    """Binarize a 1-9 rating at the midpoint: above threshold is 'high' (1)."""
    return int(trial.rating(target) > threshold)


def extract_trial_features(trials, cfg: ExperimentConfig) -> list[TrialFeatures]:
    """Preprocess each trial and extract its DE and PSD cubes (fusion-agnostic)."""
    out = []
    for trial in trials:
        rec = Recording(trial.samples.astype(np.float64), trial.sample_rate_hz)
        rec = preprocess(rec, cfg.preprocess)
        de = extract_cube(rec, "DE", frames=cfg.frames)
        psd = extract_cube(rec, "PSD", frames=cfg.frames)
        out.append(TrialFeatures(de, psd, label_for(trial, cfg.target, cfg.rating_threshold)))
    return out


def _zscore_per_band(values: np.ndarray) -> np.ndarray:
    mean = values.mean(axis=(0, 2), keepdims=True)
    std = values.std(axis=(0, 2), keepdims=True)
    return (values - mean) / np.where(std > 0, std, 1.0)


def fused_values(de: FeatureCube, psd: FeatureCube, mode: str, zscore_before_fusion: bool) -> np.ndarray:
    if mode == "DE":
        return de.values
    if mode == "PSD":
        return psd.values
    de_v, psd_v = de.values, psd.values
    if zscore_before_fusion:
        de_v, psd_v = _zscore_per_band(de_v), _zscore_per_band(psd_v)
    if mode == "SUM":
        return de_v + psd_v
    if mode == "MCA":
        if not zscore_before_fusion:
            return fuse_cubes(de, psd).values
        from .fusion import mca

        fused = np.empty_like(de_v)
        for b in range(de_v.shape[1]):
            fused[:, b, :] = mca(de_v[:, b, :], psd_v[:, b, :])
        return fused
    raise ConfigError(f"unknown feature mode {mode!r}")


def assemble_segments(features: list[TrialFeatures], cfg: ExperimentConfig):
    """Fuse per the feature mode and cut each cube into (1, C, B, 3) blocks."""
    blocks, labels = [], []
    for tf in features:
        fused = FeatureCube("FUSED", fused_values(tf.de, tf.psd, cfg.feature_mode, cfg.zscore_before_fusion))
        for seg in segment_cube(fused):
            blocks.append(seg[None, ...])
            labels.append(tf.label)
    return np.asarray(blocks, dtype=np.float64), np.asarray(labels, dtype=np.intp)


def split_sha256(train_idx: np.ndarray, test_idx: np.ndarray, labels: np.ndarray) -> str:
    h = hashlib.sha256()
    h.update(np.asarray(train_idx, dtype="<i8").tobytes())
    h.update(b"|")
    h.update(np.asarray(test_idx, dtype="<i8").tobytes())
    h.update(b"|")
    h.update(np.asarray(labels, dtype="<i8").tobytes())
    return h.hexdigest()


@dataclass
class ExperimentResult:
    metrics: Metrics
    history: dict
    n_train: int
    n_test: int
    split_hash: str
    network: object
    seconds_per_segment: float  # console-only; excluded from the JSON report

    def report(self, cfg: ExperimentConfig) -> dict:
        """Deterministic report payload (no wall-clock content)."""
        return {
            "target": cfg.target,
            "feature_mode": cfg.feature_mode,
            "seed": cfg.train.seed,
            "epochs": cfg.train.epochs,
            "batch_size": cfg.train.batch_size,
            "learning_rate": cfg.train.learning_rate,
            "train_fraction": cfg.train.train_fraction,
            "standardize": cfg.standardize,
            "zscore_before_fusion": cfg.zscore_before_fusion,
            "n_train": self.n_train,
            "n_test": self.n_test,
            "split_sha256": self.split_hash,
            "metrics": self.metrics.as_dict(),
            "history": self.history,
        }


def run_from_features(features: list[TrialFeatures], cfg: ExperimentConfig) -> ExperimentResult:
    segments, labels = assemble_segments(features, cfg)
    if np.unique(labels).size < 2:
        raise SingleClassError(f"all trials map to one {cfg.target} class; cannot train")
    rng = np.random.default_rng(cfg.train.seed)
    train_idx, test_idx = stratified_split(labels, cfg.train.train_fraction, rng)

    x_train, y_train = segments[train_idx], labels[train_idx]
    x_test, y_test = segments[test_idx], labels[test_idx]
    if cfg.standardize:
        mean = x_train.mean(axis=(0, 4), keepdims=True)
        std = x_train.std(axis=(0, 4), keepdims=True)
        std = np.where(std > 0, std, 1.0)
        x_train = (x_train - mean) / std
        x_test = (x_test - mean) / std

    result = train(x_train, y_train, cfg.train)
    t0 = time.perf_counter()
    metrics = evaluate(result.network, x_test, y_test)
    per_segment = (time.perf_counter() - t0) / max(len(y_test), 1)
    return ExperimentResult(
        metrics=metrics,
        history=result.history,
        n_train=len(train_idx),
        n_test=len(test_idx),
        split_hash=split_sha256(train_idx, test_idx, labels),
        network=result.network,
        seconds_per_segment=per_segment,
    )


def run_experiment(trials, cfg: ExperimentConfig) -> ExperimentResult:
    return run_from_features(extract_trial_features(trials, cfg), cfg)


@dataclass
class AblationRow:
    feature_mode: str
    accuracies: list
    mean_accuracy: float
    std_accuracy: float


def run_ablation(trials, cfg: ExperimentConfig, seeds, modes=FEATURE_MODES, log=print):
    """All feature modes over all seeds from one shared feature extraction.

    Raises if any two arms of the same seed disagree on the split hash, which
    would mean the arms were not trained on identical partitions.
    """
    from dataclasses import replace

    seeds = list(seeds)
    if not seeds:
        raise ConfigError("ablation needs at least one seed")
    features = extract_trial_features(trials, cfg)
    split_by_seed: dict[int, str] = {}
    rows = []
    for mode in modes:
        accs = []
        for seed in seeds:
            arm = replace(cfg, feature_mode=mode, train=replace(cfg.train, seed=seed))
            res = run_from_features(features, arm)
            accs.append(res.metrics.accuracy)
            log(f"[ablate] seed={seed} mode={mode:>3} split={res.split_hash[:12]} acc={res.metrics.accuracy:.4f}")
            expected = split_by_seed.setdefault(seed, res.split_hash)
            if expected != res.split_hash:
                raise RuntimeError(
                    f"split hash diverged across ablation arms for seed {seed}: "
                    f"{expected[:12]} vs {res.split_hash[:12]}"
                )
        rows.append(AblationRow(mode, accs, float(np.mean(accs)), float(np.std(accs))))
    return rows
