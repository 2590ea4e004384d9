"""Bit-exact file formats: mono WAV, canonical patch JSON, spectrogram CSV.

All writes go through a temp-file-plus-rename so interrupted runs never
leave half-written files. Patch JSON is canonical (fixed key order, fixed
float formatting) so equal content always produces identical bytes.
"""

from __future__ import annotations

import json
import logging
import os
import struct
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .architectures import ArchitectureError, SynthPatch, get_architecture
from .dsp import AudioBuffer, stft_magnitudes

log = logging.getLogger(__name__)

PATCH_FORMAT_VERSION = 1


class WavFormatError(ValueError):
    """Unsupported or corrupt WAV content."""


class PatchFormatError(ValueError):
    """Patch file fails schema or invariant validation."""


def _atomic_write(path, data: bytes) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


# ---------------------------------------------------------------------------
# WAV
# ---------------------------------------------------------------------------

def write_wav(buffer: AudioBuffer, path, encoding: str = "float32") -> None:
    """Write mono audio as canonical little-endian RIFF/WAVE.

    ``encoding`` is "pcm16" (format 1, round-to-nearest with clamp) or
    "float32" (format 3, with a fact chunk). Out-of-range input samples are
    clamped; their count is logged as a warning.
    """
    samples = buffer.samples
    n_clipped = int(np.count_nonzero((samples < -1.0) | (samples > 1.0)))
    if n_clipped:
        log.warning("write_wav clamped %d out-of-range samples for %s", n_clipped, path)
        samples = np.clip(samples, -1.0, 1.0)

    if encoding == "pcm16":
        fmt_code, bits = 1, 16
        payload = np.clip(np.round(samples * 32767.0), -32768, 32767).astype("<i2").tobytes()
    elif encoding == "float32":
        fmt_code, bits = 3, 32
        payload = samples.astype("<f4").tobytes()
    else:
        raise ValueError(f"unknown encoding {encoding!r}; expected pcm16 or float32")

    rate = buffer.sample_rate
    block_align = bits // 8
    fmt = struct.pack("<HHIIHH", fmt_code, 1, rate, rate * block_align, block_align, bits)
    chunks = [b"fmt ", struct.pack("<I", len(fmt)), fmt]
    if fmt_code == 3:
        chunks += [b"fact", struct.pack("<I", 4), struct.pack("<I", len(samples))]
    chunks += [b"data", struct.pack("<I", len(payload)), payload]
    if len(payload) % 2:
        chunks.append(b"\x00")
    body = b"".join(chunks)
    _atomic_write(path, b"RIFF" + struct.pack("<I", 4 + len(body)) + b"WAVE" + body)


def read_wav(path) -> AudioBuffer:
    """Read a mono PCM16 or float32 WAV into samples in [-1, 1]."""
    raw = Path(path).read_bytes()
    if len(raw) < 12 or raw[:4] != b"RIFF" or raw[8:12] != b"WAVE":
        raise WavFormatError(f"{path}: not a RIFF/WAVE file")

    fmt_chunk = None
    data_chunk = None
    pos = 12
    while pos + 8 <= len(raw):
        cid = raw[pos:pos + 4]
        (size,) = struct.unpack_from("<I", raw, pos + 4)
        body = raw[pos + 8:pos + 8 + size]
        if len(body) < size:
            raise WavFormatError(f"{path}: truncated {cid.decode(errors='replace')} chunk")
        if cid == b"fmt ":
            fmt_chunk = body
        elif cid == b"data":
            data_chunk = body
        pos += 8 + size + (size % 2)

    if fmt_chunk is None or len(fmt_chunk) < 16:
        raise WavFormatError(f"{path}: missing fmt chunk")
    if data_chunk is None:
        raise WavFormatError(f"{path}: missing data chunk")
    fmt_code, channels, rate, _, _, bits = struct.unpack_from("<HHIIHH", fmt_chunk)
    if channels != 1:
        raise WavFormatError(f"{path}: unsupported channel count {channels} (mono only)")

    if fmt_code == 1 and bits == 16:
        pcm = np.frombuffer(data_chunk, dtype="<i2").astype(np.float64)
        samples = np.clip(pcm / 32767.0, -1.0, 1.0)
    elif fmt_code == 3 and bits == 32:
        samples = np.frombuffer(data_chunk, dtype="<f4").astype(np.float64)
    else:
        raise WavFormatError(
            f"{path}: unsupported encoding (format {fmt_code}, {bits}-bit); "
            "expected PCM16 or float32"
        )
    return AudioBuffer(samples, rate)


# ---------------------------------------------------------------------------
# Patch JSON
# ---------------------------------------------------------------------------

@dataclass
class PatchMeta:
    prompt: str | None = None
    seed: int | None = None
    fitness: float | None = None
    created_at: str | None = None


@dataclass
class PatchFile:
    """Validated on-disk patch: layout, parameter values, and metadata."""

    format_version: int
    architecture: str
    params: list[float]
    names: list[str]
    meta: PatchMeta

    def to_patch(self) -> SynthPatch:
        return SynthPatch(self.architecture, np.array(self.params))


def _meta_json(meta: PatchMeta) -> str:
    def opt(value):
        return "null" if value is None else json.dumps(value)

    fitness = "null" if meta.fitness is None else f"{meta.fitness:.9f}"
    return (
        "{\n"
        f'    "prompt": {opt(meta.prompt)},\n'
        f'    "seed": {opt(meta.seed)},\n'
        f'    "fitness": {fitness},\n'
        f'    "created_at": {opt(meta.created_at)}\n'
        "  }"
    )


def save_patch(patch: SynthPatch, meta: PatchMeta | None, path) -> None:
    """Write a patch as canonical JSON (parameters quantized to 9 decimals)."""
    spec = get_architecture(patch.architecture)
    meta = meta or PatchMeta()
    params = ", ".join(f"{v:.9f}" for v in patch.theta)
    names = ", ".join(json.dumps(n) for n in spec.param_names)
    text = (
        "{\n"
        f'  "format_version": {PATCH_FORMAT_VERSION},\n'
        f'  "architecture": {json.dumps(patch.architecture)},\n'
        f'  "params": [{params}],\n'
        f'  "names": [{names}],\n'
        f'  "meta": {_meta_json(meta)}\n'
        "}\n"
    )
    _atomic_write(path, text.encode("utf-8"))


def load_patch(path) -> PatchFile:
    """Load and validate a patch file; every invariant violation is an error."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise PatchFormatError(f"{path}: unreadable patch file: {exc}") from exc
    if not isinstance(doc, dict):
        raise PatchFormatError(f"{path}: patch file must be a JSON object")

    version = doc.get("format_version")
    if version != PATCH_FORMAT_VERSION:
        raise PatchFormatError(
            f"{path}: format_version {version!r} unsupported "
            f"(expected {PATCH_FORMAT_VERSION})"
        )
    arch = doc.get("architecture")
    try:
        spec = get_architecture(arch)
    except ArchitectureError as exc:
        raise PatchFormatError(f"{path}: {exc}") from exc

    params = doc.get("params")
    names = doc.get("names")
    if not isinstance(params, list) or not isinstance(names, list):
        raise PatchFormatError(f"{path}: params and names must be arrays")
    if len(params) != spec.param_count or len(names) != spec.param_count:
        raise PatchFormatError(
            f"{path}: expected {spec.param_count} params/names for {arch}, "
            f"got {len(params)} params and {len(names)} names"
        )
    if tuple(names) != spec.param_names:
        raise PatchFormatError(f"{path}: parameter names do not match the {arch} layout")
    for name, value in zip(names, params):
        if not isinstance(value, (int, float)) or not np.isfinite(value):
            raise PatchFormatError(f"{path}: parameter {name!r} is not a finite number")
        if not 0.0 <= value <= 1.0:
            raise PatchFormatError(
                f"{path}: parameter {name!r} = {value!r} is outside [0, 1]"
            )

    meta_doc = doc.get("meta") or {}
    meta = PatchMeta(
        prompt=meta_doc.get("prompt"),
        seed=meta_doc.get("seed"),
        fitness=meta_doc.get("fitness"),
        created_at=meta_doc.get("created_at"),
    )
    return PatchFile(version, arch, [float(v) for v in params], list(names), meta)


# ---------------------------------------------------------------------------
# Spectrogram export
# ---------------------------------------------------------------------------

def export_spectrogram(buffer: AudioBuffer, path,
                       frame_size: int = 2048, hop: int = 1024) -> None:
    """Write dB magnitudes (20*log10(|X| + 1e-10)) as CSV, one row per frame."""
    mags = stft_magnitudes(buffer.samples, frame_size, hop)
    if mags.shape[0] == 0:
        raise ValueError(
            f"buffer of {len(buffer)} samples is shorter than one "
            f"{frame_size}-sample frame"
        )
    db = 20.0 * np.log10(mags + 1e-10)
    lines = [",".join(f"{v:.6f}" for v in row) for row in db]
    _atomic_write(path, ("\n".join(lines) + "\n").encode("utf-8"))
