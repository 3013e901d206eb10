"""EEGC trial container: a little-endian binary format for labelled EEG trials.

Layout (all little-endian):

    magic      4 bytes  b"EEGC"
    version    u16      currently 1
    n_trials   u32
    per trial:
        subject_id      u16
        trial_id        u16
        channels        u16
        sample_rate_hz  f64
        n_samples       u32
        valence         f64   rating on [1, 9]
        arousal         f64   rating on [1, 9]
        payload         f32 x channels x n_samples, channel-major
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass

import numpy as np

from .errors import ContainerFormatError

MAGIC = b"EEGC"
VERSION = 1
_TRIAL_HEADER = struct.Struct("<HHHdIdd")


@dataclass
class Trial:
    subject_id: int
    trial_id: int
    sample_rate_hz: float
    valence: float
    arousal: float
    samples: np.ndarray  # (channels, n_samples) float32

    def __post_init__(self):
        self.samples = np.ascontiguousarray(self.samples, dtype=np.float32)
        if self.samples.ndim != 2:
            raise ContainerFormatError(f"trial samples must be channels x samples, got {self.samples.shape}")
        for name, rating in (("valence", self.valence), ("arousal", self.arousal)):
            if not 1.0 <= rating <= 9.0:
                raise ContainerFormatError(f"{name} rating {rating} outside [1, 9]")

    @property
    def channels(self) -> int:
        return self.samples.shape[0]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]

    def payload_bytes(self) -> bytes:
        return np.ascontiguousarray(self.samples, dtype="<f4").tobytes()

    def payload_sha256(self) -> str:
        return hashlib.sha256(self.payload_bytes()).hexdigest()

    def rating(self, target: str) -> float:
        if target not in ("valence", "arousal"):
            raise ValueError(f"unknown rating target {target!r}")
        return self.valence if target == "valence" else self.arousal


def write_container(path, trials) -> None:
    trials = list(trials)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<HI", VERSION, len(trials)))
        for t in trials:
            fh.write(
                _TRIAL_HEADER.pack(
                    t.subject_id,
                    t.trial_id,
                    t.channels,
                    t.sample_rate_hz,
                    t.n_samples,
                    t.valence,
                    t.arousal,
                )
            )
            fh.write(t.payload_bytes())


def read_container(path) -> list[Trial]:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 10:
        raise ContainerFormatError(f"file too short ({len(blob)} bytes) to hold an EEGC header")
    if blob[:4] != MAGIC:
        raise ContainerFormatError(f"bad magic {blob[:4]!r}, expected {MAGIC!r}")
    version, n_trials = struct.unpack_from("<HI", blob, 4)
    if version != VERSION:
        raise ContainerFormatError(f"unsupported EEGC version {version}, expected {VERSION}")
    offset = 10
    trials = []
    for i in range(n_trials):
        if offset + _TRIAL_HEADER.size > len(blob):
            raise ContainerFormatError(f"trial {i}: header truncated at byte {offset}")
        subject_id, trial_id, channels, fs, n_samples, valence, arousal = _TRIAL_HEADER.unpack_from(
            blob, offset
        )
        offset += _TRIAL_HEADER.size
        payload_len = channels * n_samples * 4
        if offset + payload_len > len(blob):
            raise ContainerFormatError(
                f"trial {i}: payload truncated, need {payload_len} bytes at offset {offset}"
            )
        samples = np.frombuffer(blob[offset : offset + payload_len], dtype="<f4").reshape(
            channels, n_samples
        )
        offset += payload_len
        trials.append(Trial(subject_id, trial_id, fs, valence, arousal, samples.copy()))
    if offset != len(blob):
        raise ContainerFormatError(f"{len(blob) - offset} trailing bytes after the last trial")
    return trials


def container_info(path) -> dict:
    """Metadata summary (no payload) plus a sha256 per trial payload."""
    trials = read_container(path)
    return {
        "version": VERSION,
        "n_trials": len(trials),
        "trials": [
            {
                "subject_id": t.subject_id,
                "trial_id": t.trial_id,
                "channels": t.channels,
                "sample_rate_hz": t.sample_rate_hz,
                "n_samples": t.n_samples,
                "valence": t.valence,
                "arousal": t.arousal,
                "payload_sha256": t.payload_sha256(),
            }
            for t in trials
        ],
    }
