"""Figure rendering for the CLI report paths.

Every CLI command that writes delimited output also renders a matplotlib
figure next to it: loss curves beside training CSVs, the noise-space
trajectory beside the swirl CSV, the scatter beside the PCA points, and
grid strips for generated pattern sequences. Analysis code itself stays
plotting-free; this module is the only place figures are made.
"""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from drumweave.patterns import INSTRUMENT_ROLES, DrumPattern

#: Fixed PNG metadata so repeated runs emit byte-identical files.
_PNG_METADATA = {"Software": "drumweave"}

GENRE_COLORS = {
    "IDM": "#444444",
    "Electro": "#1f77b4",
    "Techno": "#d62728",
    "Generated": "#2ca02c",
}


def _save(fig, path: Path | str) -> None:
    fig.savefig(path, dpi=120, metadata=_PNG_METADATA)
    plt.close(fig)


def save_loss_curves(history, path: Path | str) -> None:
    """VAE training curves: total, reconstruction, and KL per epoch."""
    epochs = [s.epoch for s in history]
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(epochs, [s.total for s in history], label="total", lw=1.2)
    ax.plot(epochs, [s.recon for s in history], label="reconstruction", lw=1.2)
    ax.plot(epochs, [s.kl for s in history], label="KL", lw=1.2)
    ax.set_xlabel("epoch")
    ax.set_ylabel("loss")
    ax.set_yscale("log")
    ax.legend(frameon=False)
    fig.tight_layout()
    _save(fig, path)


def save_gan_history(history, path: Path | str) -> None:
    """GAN curves: both objectives plus discriminator accuracy."""
    epochs = [s.epoch for s in history]
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7, 5), sharex=True)
    ax1.plot(epochs, [s.j_d for s in history], label="J_d", lw=1.2)
    ax1.plot(epochs, [s.j_g for s in history], label="J_g", lw=1.2)
    ax1.set_ylabel("objective")
    ax1.legend(frameon=False)
    ax2.plot(epochs, [s.accuracy for s in history], color="#444444", lw=1.2)
    ax2.axhline(0.5, color="#999999", ls=":", lw=0.8)
    ax2.set_ylabel("D accuracy")
    ax2.set_xlabel("epoch")
    ax2.set_ylim(0, 1.05)
    fig.tight_layout()
    _save(fig, path)


def save_swirl_figure(points: np.ndarray, path: Path | str) -> None:
    """Trajectory of the swirl through the 2-D noise space."""
    fig, ax = plt.subplots(figsize=(5, 5))
    ax.plot(points[:, 0], points[:, 1], lw=0.8, color="#1f77b4")
    ax.scatter(points[0, 0], points[0, 1], s=30, color="#d62728", zorder=3,
               label="start/end")
    ax.set_xlabel("Re z")
    ax.set_ylabel("Im z")
    ax.set_aspect("equal")
    ax.legend(frameon=False, loc="upper right")
    fig.tight_layout()
    _save(fig, path)


def save_pca_figure(points_by_label: Mapping[str, np.ndarray],
                    trajectories: Sequence[tuple[str, np.ndarray]] = (),
                    path: Path | str = "pca.png") -> None:
    """Training-set scatter with optional interpolation trajectories."""
    fig, ax = plt.subplots(figsize=(6, 5))
    for label, pts in points_by_label.items():
        ax.scatter(pts[:, 0], pts[:, 1], s=6,
                   color=GENRE_COLORS.get(label, "#888888"),
                   label=label, alpha=0.6, linewidths=0)
    for label, pts in trajectories:
        ax.plot(pts[:, 0], pts[:, 1], lw=1.0, marker="o", ms=2.5, alpha=0.9)
        ax.annotate(label, pts[len(pts) // 2], fontsize=6)
    ax.set_xlabel("PC 1")
    ax.set_ylabel("PC 2")
    ax.legend(frameon=False, markerscale=2)
    fig.tight_layout()
    _save(fig, path)


def save_sequence_figure(patterns: Sequence[DrumPattern],
                         path: Path | str) -> None:
    """Side-by-side grid strip; cell intensity maps velocity."""
    n = len(patterns)
    fig, axes = plt.subplots(1, n, figsize=(min(2.2 * n, 24), 2.2))
    if n == 1:
        axes = [axes]
    for k, (ax, p) in enumerate(zip(axes, patterns)):
        ax.imshow(p.grid, cmap="gray_r", vmin=0.0, vmax=1.0,
                  aspect="auto", interpolation="nearest")
        ax.set_xticks([])
        ax.set_yticks([])
        ax.set_title(str(k), fontsize=7)
        if k == 0:
            ax.set_yticks(range(len(INSTRUMENT_ROLES)))
            ax.set_yticklabels(INSTRUMENT_ROLES, fontsize=5)
    fig.tight_layout()
    _save(fig, path)
