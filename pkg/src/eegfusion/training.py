"""Mini-batch Adam training over fused segments, plus binary evaluation metrics.

Everything is driven by one seeded generator: the stratified split, the He
initialization, and the per-epoch shuffles, so a (data, config, seed) triple
pins down the whole parameter trajectory.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cnn import Network, build_network, softmax_cross_entropy
from .errors import EmptyDatasetError, SingleClassError


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    batch_size: int = 64
    epochs: int = 20
    seed: int = 0
    train_fraction: float = 0.8

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError(f"train_fraction must be in (0, 1), got {self.train_fraction}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")


class Adam:
    def __init__(self, params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self._m = [np.zeros_like(p.value) for p in self.params]
        self._v = [np.zeros_like(p.value) for p in self.params]

    def step(self):
        self.t += 1
        for p, m, v in zip(self.params, self._m, self._v):
            m *= self.beta1
            m += (1.0 - self.beta1) * p.grad
            v *= self.beta2
            v += (1.0 - self.beta2) * p.grad**2
            m_hat = m / (1.0 - self.beta1**self.t)
            v_hat = v / (1.0 - self.beta2**self.t)
            p.value -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


@dataclass
class Metrics:
    accuracy: float
    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    fn: int
    tn: int

    def as_dict(self):
        return {
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "confusion": {"tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn},
        }


def metrics_from_confusion(tp: int, fp: int, fn: int, tn: int) -> Metrics:
    """Standard binary metrics with label 1 ("high") as the positive class."""
    total = tp + fp + fn + tn
    if total == 0:
        raise EmptyDatasetError("cannot compute metrics for an empty dataset")
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return Metrics((tp + tn) / total, precision, recall, f1, tp, fp, fn, tn)


def stratified_split(labels: np.ndarray, train_fraction: float, rng: np.random.Generator):
    """Per-class shuffled split; returns (train_idx, test_idx) as sorted arrays."""
    labels = np.asarray(labels)
    train, test = [], []
    for cls in np.unique(labels):
        idx = np.flatnonzero(labels == cls)
        idx = rng.permutation(idx)
        cut = int(round(train_fraction * len(idx)))
        cut = min(max(cut, 1), len(idx) - 1)
        train.append(idx[:cut])
        test.append(idx[cut:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))


@dataclass
class TrainResult:
    network: Network
    history: dict = field(default_factory=dict)


def train(segments: np.ndarray, labels: np.ndarray, cfg: TrainConfig = TrainConfig()) -> TrainResult:
    """Seeded mini-batch Adam over (N, 1, C, B, F) blocks with 0/1 labels."""
    segments = np.asarray(segments, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.intp)
    if len(segments) == 0:
        raise EmptyDatasetError("training set is empty")
    if np.unique(labels).size < 2:
        raise SingleClassError("training requires examples of both classes")

    rng = np.random.default_rng(cfg.seed)
    net = build_network(seed=cfg.seed, input_shape=segments.shape[1:])
    opt = Adam(net.params(), cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.eps)

    history = {"loss": [], "accuracy": []}
    n = len(segments)
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        epoch_correct = 0
        for start in range(0, n, cfg.batch_size):
            batch_idx = order[start : start + cfg.batch_size]
            x = segments[batch_idx]
            y = labels[batch_idx]
            logits = net.forward(x)
            loss, dlogits, probs = softmax_cross_entropy(logits, y)
            net.zero_grads()
            net.backward(dlogits)
            opt.step()
            epoch_loss += loss * len(batch_idx)
            epoch_correct += int((probs.argmax(axis=1) == y).sum())
        history["loss"].append(epoch_loss / n)
        history["accuracy"].append(epoch_correct / n)
    return TrainResult(net, history)


def predict(net: Network, segments: np.ndarray, batch_size: int = 64) -> np.ndarray:
    segments = np.asarray(segments, dtype=np.float64)
    out = []
    for start in range(0, len(segments), batch_size):
        out.append(net.forward(segments[start : start + batch_size]).argmax(axis=1))
    return np.concatenate(out) if out else np.empty(0, dtype=np.intp)


def evaluate(net: Network, segments: np.ndarray, labels: np.ndarray) -> Metrics:
    """Confusion-matrix metrics of the network on a labelled segment set."""
    labels = np.asarray(labels, dtype=np.intp)
    if len(labels) == 0:
        raise EmptyDatasetError("evaluation set is empty")
    preds = predict(net, segments)
    tp = int(((preds == 1) & (labels == 1)).sum())
    fp = int(((preds == 1) & (labels == 0)).sum())
    fn = int(((preds == 0) & (labels == 1)).sum())
    tn = int(((preds == 0) & (labels == 0)).sum())
    return metrics_from_confusion(tp, fp, fn, tn)
