"""Static report figures rendered to files next to the delimited outputs."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_RC = {
    "figure.figsize": (7.0, 4.2),
    "axes.grid": True,
    "grid.alpha": 0.3,
    "savefig.dpi": 150,
}


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def render_psd_figure(freqs, psd_by_channel, out_path, title="Welch PSD"):
    """Per-channel PSD curves (faint) with the channel mean highlighted."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        psd = np.asarray(psd_by_channel)
        for row in psd:
            ax.plot(freqs, row, color="steelblue", alpha=0.15, linewidth=0.6)
        ax.plot(freqs, psd.mean(axis=0), color="crimson", linewidth=1.6, label="channel mean")
        ax.set_xlabel("frequency (Hz)")
        ax.set_ylabel("PSD (uV^2/Hz)")
        ax.set_title(title)
        ax.legend()
        _save(fig, out_path)


def render_training_curves(history, out_path, title="Training"):
    with plt.rc_context(_RC):
        fig, axes = plt.subplots(1, 2, figsize=(9.5, 4.0))
        epochs = np.arange(1, len(history["loss"]) + 1)
        axes[0].plot(epochs, history["loss"], marker="o", markersize=3)
        axes[0].set_xlabel("epoch")
        axes[0].set_ylabel("mean batch loss")
        axes[0].set_title(f"{title}: loss")
        axes[1].plot(epochs, history["accuracy"], marker="o", markersize=3, color="seagreen")
        axes[1].set_xlabel("epoch")
        axes[1].set_ylabel("train accuracy")
        axes[1].set_ylim(0.0, 1.02)
        axes[1].set_title(f"{title}: accuracy")
        _save(fig, out_path)


def render_confusion(metrics, out_path, title="Confusion"):
    counts = np.array([[metrics.tn, metrics.fp], [metrics.fn, metrics.tp]])
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(4.2, 3.8))
        ax.imshow(counts, cmap="Blues")
        for (i, j), v in np.ndenumerate(counts):
            ax.text(j, i, str(v), ha="center", va="center",
                    color="black" if v < counts.max() * 0.6 else "white")
        ax.set_xticks([0, 1], ["pred low", "pred high"])
        ax.set_yticks([0, 1], ["true low", "true high"])
        ax.set_title(title)
        ax.grid(False)
        _save(fig, out_path)


def render_ablation(rows, out_path, title="Feature-mode ablation"):
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        names = [r.feature_mode for r in rows]
        means = [r.mean_accuracy for r in rows]
        stds = [r.std_accuracy for r in rows]
        ax.bar(names, means, yerr=stds, capsize=4, color="slategray")
        ax.set_ylabel("accuracy")
        ax.set_ylim(0.0, 1.05)
        ax.set_title(title)
        _save(fig, out_path)
