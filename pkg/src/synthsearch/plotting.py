"""Figure rendering for CLI reports.

Every CLI command that emits delimited output also renders a matplotlib
figure next to it; this module keeps the graphics dependency out of the
core library modules.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .dsp import AudioBuffer, stft_magnitudes

_DB_FLOOR = 1e-10


def _spectrogram_db(buffer: AudioBuffer) -> np.ndarray:
    mags = stft_magnitudes(buffer.samples)
    return 20.0 * np.log10(mags + _DB_FLOOR)


def _draw_spectrogram(ax, buffer: AudioBuffer, title: str | None = None) -> None:
    db = _spectrogram_db(buffer)
    extent = (0.0, buffer.duration, 0.0, buffer.sample_rate / 2.0 / 1000.0)
    vmax = max(float(db.max()) if db.size else 0.0, -119.0)  # silence-safe
    ax.imshow(db.T, origin="lower", aspect="auto", extent=extent,
              cmap="magma", vmin=-120, vmax=vmax)
    if title:
        ax.set_title(title, fontsize=9)


def save_history_figure(history, path) -> None:
    """Best-so-far and population-mean fitness curves."""
    best = [b for b, _ in history]
    mean = [m for _, m in history]
    fig, ax = plt.subplots(figsize=(6, 3.5))
    iters = np.arange(1, len(history) + 1)
    ax.plot(iters, best, label="best so far")
    ax.plot(iters, mean, label="population mean", alpha=0.6)
    ax.set_xlabel("iteration")
    ax.set_ylabel("fitness (lower is better)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_spectrogram_figure(buffer: AudioBuffer, path, title: str | None = None) -> None:
    fig, ax = plt.subplots(figsize=(6, 3.5))
    _draw_spectrogram(ax, buffer, title)
    ax.set_xlabel("time (s)")
    ax.set_ylabel("frequency (kHz)")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_interpolation_figure(buffers, path) -> None:
    """A strip of spectrograms, one per interpolation step."""
    n = len(buffers)
    fig, axes = plt.subplots(1, n, figsize=(2.2 * n, 2.8), sharey=True)
    if n == 1:
        axes = [axes]
    for i, (ax, buf) in enumerate(zip(axes, buffers)):
        _draw_spectrogram(ax, buf, title=f"step {i}")
        ax.set_xlabel("s")
    axes[0].set_ylabel("kHz")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_ablation_figure(curves: dict[str, list[float]], path) -> None:
    """Mean best-so-far curve per variant."""
    fig, ax = plt.subplots(figsize=(6, 3.5))
    for variant, curve in curves.items():
        ax.plot(np.arange(1, len(curve) + 1), curve, label=str(variant))
    ax.set_xlabel("iteration")
    ax.set_ylabel("mean best fitness")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_bench_figure(rows, path) -> None:
    """Wall-clock seconds vs iterations, one line per population size."""
    fig, ax = plt.subplots(figsize=(6, 3.5))
    by_pop: dict[int, list[tuple[int, float]]] = {}
    for iters, pop, seconds in rows:
        by_pop.setdefault(pop, []).append((iters, seconds))
    for pop, points in sorted(by_pop.items()):
        points.sort()
        ax.plot([p[0] for p in points], [p[1] for p in points],
                marker="o", label=f"popsize {pop}")
    ax.set_xlabel("iterations")
    ax.set_ylabel("seconds")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_descriptor_figure(rows, path) -> None:
    """Bar chart per descriptor across the evaluated corpus."""
    names = [p for p, _ in rows]
    fields = ("complexity", "flux", "hfc", "rolloff", "centroid", "compression_ratio")
    fig, axes = plt.subplots(2, 3, figsize=(11, 5.5))
    short = [n.rsplit("/", 1)[-1] for n in names]
    for ax, f in zip(axes.flat, fields):
        ax.bar(range(len(rows)), [getattr(r, f) for _, r in rows])
        ax.set_title(f, fontsize=9)
        ax.set_xticks(range(len(rows)))
        ax.set_xticklabels(short, rotation=60, fontsize=6, ha="right")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
