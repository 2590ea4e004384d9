"""Reference-free acoustic descriptors over framed magnitude spectra.

All descriptors share one framing pass (2048-sample frames, 1024 hop, Hann
window) and are pure functions, so a corpus can be characterized
deterministically. Conventions for degenerate input: a silent frame has
centroid and rolloff 0, and the flux distance between a silent frame and
any unit-normalized frame is 1 (the silent frame is the zero vector).
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np

from .dsp import AudioBuffer, stft_magnitudes

FRAME_SIZE = 2048
HOP_SIZE = 1024

# Peak-counting threshold, relative to the peak magnitude of a full-scale
# windowed sine (amplitude 1 on a bin center): sum(hann)/2.
COMPLEXITY_THRESHOLD = 0.005
_FULL_SCALE_PEAK = np.hanning(FRAME_SIZE).sum() / 2.0


@dataclass
class SpectralFrames:
    """Per-frame magnitude spectra: shape (n_frames, FRAME_SIZE//2 + 1)."""

    magnitudes: np.ndarray
    sample_rate: int
    frame_size: int = FRAME_SIZE

    def __post_init__(self):
        self.magnitudes = np.asarray(self.magnitudes, dtype=np.float64)
        if self.magnitudes.ndim != 2 or self.magnitudes.shape[0] < 1:
            raise ValueError("SpectralFrames needs at least one frame")
        if np.any(self.magnitudes < 0):
            raise ValueError("magnitudes must be non-negative")

    @property
    def n_frames(self) -> int:
        return self.magnitudes.shape[0]

    @property
    def bin_frequencies(self) -> np.ndarray:
        n_bins = self.magnitudes.shape[1]
        return np.arange(n_bins) * self.sample_rate / self.frame_size


@dataclass
class DescriptorReport:
    complexity: float
    flux: float
    hfc: float
    rolloff: float
    centroid: float
    compression_ratio: float

    CSV_HEADER = "path,complexity,flux,hfc,rolloff,centroid,compression_ratio"

    def csv_row(self, path: str) -> str:
        return (
            f"{path},{self.complexity:.6f},{self.flux:.6f},{self.hfc:.6f},"
            f"{self.rolloff:.6f},{self.centroid:.6f},{self.compression_ratio:.6f}"
        )


def compute_frames(buffer: AudioBuffer) -> SpectralFrames:
    """Frame a buffer into magnitude spectra; raises if under one frame."""
    mags = stft_magnitudes(buffer.samples, FRAME_SIZE, HOP_SIZE)
    if mags.shape[0] == 0:
        raise ValueError(
            f"buffer of {len(buffer)} samples is shorter than one "
            f"{FRAME_SIZE}-sample frame"
        )
    return SpectralFrames(mags, buffer.sample_rate)


def spectral_centroid(frames: SpectralFrames) -> float:
    """Mean over frames of the magnitude-weighted frequency center, in Hz."""
    mags = frames.magnitudes
    totals = mags.sum(axis=1)
    freqs = frames.bin_frequencies
    with np.errstate(invalid="ignore"):
        per_frame = np.where(totals > 0, (mags @ freqs) / np.where(totals > 0, totals, 1.0), 0.0)
    return float(per_frame.mean())


def spectral_rolloff(frames: SpectralFrames, fraction: float = 0.85) -> float:
    """Mean frequency below which ``fraction`` of per-frame energy lies."""
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"fraction must be in (0, 1), got {fraction}")
    energy = frames.magnitudes ** 2
    totals = energy.sum(axis=1)
    cum = np.cumsum(energy, axis=1)
    idx = (cum >= fraction * totals[:, None]).argmax(axis=1)
    per_frame = np.where(totals > 0, frames.bin_frequencies[idx], 0.0)
    return float(per_frame.mean())


def hfc(frames: SpectralFrames) -> float:
    """Mean over frames of sum_k k * |X_k|^2 (bin-index-weighted energy)."""
    k = np.arange(frames.magnitudes.shape[1])
    return float((frames.magnitudes ** 2 @ k).mean())


def spectral_flux(frames: SpectralFrames) -> float:
    """Mean L2 distance between consecutive unit-normalized spectra.

    Silent frames normalize to the zero vector, so a transition between
    silence and any sound contributes distance 1.
    """
    if frames.n_frames < 2:
        raise ValueError("spectral flux needs at least 2 frames")
    mags = frames.magnitudes
    norms = np.linalg.norm(mags, axis=1, keepdims=True)
    unit = np.where(norms > 0, mags / np.where(norms > 0, norms, 1.0), 0.0)
    return float(np.linalg.norm(np.diff(unit, axis=0), axis=1).mean())


def spectral_complexity(frames: SpectralFrames) -> float:
    """Mean count of spectral peaks above 0.5% of a full-scale sine peak.

    A peak is a strict local maximum over three adjacent bins.
    """
    mags = frames.magnitudes
    thr = COMPLEXITY_THRESHOLD * _FULL_SCALE_PEAK
    mid = mags[:, 1:-1]
    peaks = (mid > mags[:, :-2]) & (mid > mags[:, 2:]) & (mid > thr)
    return float(peaks.sum(axis=1).mean())


def compression_ratio(buffer: AudioBuffer) -> float:
    """16-bit PCM byte count over its lossless (DEFLATE level 6) size.

    Stands in for a perceptual-codec ratio: the ordering it induces
    (redundant/periodic material compresses far better than noise) is the
    property of interest.
    """
    pcm = np.clip(np.round(buffer.samples * 32767.0), -32768, 32767).astype("<i2")
    raw = pcm.tobytes()
    return len(raw) / len(zlib.compress(raw, 6))


def describe(buffer: AudioBuffer) -> DescriptorReport:
    """All six descriptors from a single framing pass."""
    frames = compute_frames(buffer)
    return DescriptorReport(
        complexity=spectral_complexity(frames),
        flux=spectral_flux(frames) if frames.n_frames >= 2 else 0.0,
        hfc=hfc(frames),
        rolloff=spectral_rolloff(frames),
        centroid=spectral_centroid(frames),
        compression_ratio=compression_ratio(buffer),
    )


def reports_to_csv(rows) -> str:
    """Render (path, DescriptorReport) pairs as the corpus-evaluation CSV."""
    lines = [DescriptorReport.CSV_HEADER]
    lines += [report.csv_row(path) for path, report in rows]
    return "\n".join(lines) + "\n"
