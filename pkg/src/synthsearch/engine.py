"""Patch rendering: wires an architecture's signal graph into audio.

The graph is keyboard -> envelopes/LFOs -> modulation matrix -> oscillators
and noise -> per-source VCAs -> audio mixer -> hard clip. Rendering is a
pure function of (patch, duration, sample rate, noise seed).
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .architectures import ArchitectureError, SynthPatch, get_architecture, param_count
from .dsp import (
    LFO_SHAPES,
    AudioBuffer,
    lerp_upsample_rows,
    midi_to_phase,
    render_adsr,
    render_lfo,
    render_lfo_swept,
    render_noise,
    sine_from_midi,
    squaresaw_from_midi,
)

MIDI_MIN, MIDI_MAX = 0.0, 127.0


@lru_cache(maxsize=8)
def _cached_noise(seed: int, n_audio: int, sample_rate: int) -> np.ndarray:
    samples = render_noise(seed, n_audio, sample_rate).samples
    samples.flags.writeable = False
    return samples


def render_patch(
    patch: SynthPatch,
    duration: float = 2.0,
    sample_rate: int = 48_000,
    noise_seed: int = 0,
) -> AudioBuffer:
    """Render a patch deterministically to mono audio in [-1, 1]."""
    spec = get_architecture(patch.architecture)
    if duration <= 0:
        raise ValueError(f"duration must be positive, got {duration}")
    if sample_rate % spec.control_rate != 0:
        raise ValueError(
            f"sample rate {sample_rate} must be a multiple of the "
            f"control rate {spec.control_rate}"
        )
    ratio = sample_rate // spec.control_rate
    n_audio = int(round(duration * sample_rate))
    if n_audio < 1:
        raise ValueError(f"duration {duration} s is shorter than one sample")
    n_ctrl = math.ceil(n_audio / ratio)

    p = spec.to_physical(patch.theta, duration)
    midi_f0 = p["keyboard.midi_f0"]
    note_on = p["keyboard.note_on_duration"]

    def envelope(prefix: str) -> np.ndarray:
        return render_adsr(
            p[f"{prefix}.attack"], p[f"{prefix}.decay"], p[f"{prefix}.sustain"],
            p[f"{prefix}.release"], p[f"{prefix}.alpha"],
            note_on, n_ctrl, spec.control_rate,
        ).values

    # Modulation sources at the control rate, in matrix order.
    sources = []
    for i in range(1, spec.n_direct_adsrs + 1):
        sources.append(envelope(f"adsr_{i}"))
    for i in range(1, spec.n_lfos + 1):
        prefix = f"lfo_{i}"
        weights = [p[f"{prefix}.shape_{s}"] for s in LFO_SHAPES]
        depth = p[f"{prefix}.mod_depth"]
        phase0 = p[f"{prefix}.initial_phase"]
        if spec.lfo_has_adsrs:
            # Rate envelope sweeps the frequency within +/- half an octave;
            # amplitude envelope gates the output.
            rate_env = envelope(f"{prefix}_rate_adsr")
            amp_env = envelope(f"{prefix}_amp_adsr")
            freqs = p[f"{prefix}.frequency"] * 2.0 ** (rate_env - 0.5)
            wave = render_lfo_swept(freqs, phase0, weights, spec.control_rate).values
            sources.append(depth * amp_env * wave)
        else:
            wave = render_lfo(p[f"{prefix}.frequency"], phase0, weights,
                              n_ctrl, spec.control_rate).values
            sources.append(depth * wave)

    weights = np.array(
        [[p[f"matrix.{src}->{dst}"] for dst in spec.destinations]
         for src in spec.sources]
    )
    mixed = np.clip(weights.T @ np.stack(sources), -1.0, 1.0)
    controls = lerp_upsample_rows(mixed, ratio, n_audio)
    dest = {name: controls[k] for k, name in enumerate(spec.destinations)}

    def vco_midi(prefix: str, pitch_ctrl: np.ndarray, own: bool = True) -> np.ndarray:
        # Matrix pitch control in [-1, 1] deflects the keyboard pitch by up
        # to mod_depth semitones; the result is clamped to the MIDI range.
        midi = pitch_ctrl if own else pitch_ctrl.copy()
        midi *= p[f"{prefix}.mod_depth"]
        midi += midi_f0 + p[f"{prefix}.tuning"]
        np.clip(midi, MIDI_MIN, MIDI_MAX, out=midi)
        return midi

    mix = np.zeros(n_audio)
    for src in spec.audio_sources:
        level = p[f"mixer.{src}"]
        if level == 0.0:
            continue
        if src == "vco_sine":
            sig = sine_from_midi(vco_midi("vco_sine", dest["vco_sine_pitch"]),
                                 p["vco_sine.initial_phase"], sample_rate)
        elif src == "vco_squaresaw":
            sig = squaresaw_from_midi(
                vco_midi("vco_squaresaw", dest["vco_squaresaw_pitch"]),
                p["vco_squaresaw.shape"], p["vco_squaresaw.initial_phase"], sample_rate,
            )
        elif src == "noise":
            sig = _cached_noise(noise_seed, n_audio, sample_rate)
        elif src == "fm":
            # Two-operator FM: both operators track the keyboard and the
            # matrix pitch control; the modulator bends the carrier phase by
            # up to fm.index radians.
            pitch_ctrl = dest["fm_pitch"]
            mod_sig = sine_from_midi(vco_midi("fm_modulator", pitch_ctrl, own=False),
                                     p["fm_modulator.initial_phase"], sample_rate)
            mod_sig *= p["fm.index"]
            phi_car = midi_to_phase(vco_midi("fm_carrier", pitch_ctrl),
                                    p["fm_carrier.initial_phase"], sample_rate)
            phi_car += mod_sig
            sig = np.sin(phi_car, out=phi_car)
        else:  # pragma: no cover - registry guards this
            raise ArchitectureError(f"unknown audio source {src!r}")
        amp = dest[f"{src}_amp"]
        np.clip(amp, 0.0, 1.0, out=amp)
        amp *= level
        amp *= sig
        mix += amp

    return AudioBuffer(np.clip(mix, -1.0, 1.0), sample_rate)


def render_batch(
    architecture: str,
    thetas: np.ndarray,
    duration: float = 2.0,
    sample_rate: int = 48_000,
    noise_seed: int = 0,
) -> list[AudioBuffer]:
    """Render N parameter rows; row i is bit-identical to render_patch on it."""
    try:
        thetas = np.asarray(thetas, dtype=np.float64)
    except ValueError as exc:
        raise ArchitectureError(f"ragged parameter matrix: {exc}") from exc
    if thetas.size == 0:
        return []
    if thetas.ndim != 2:
        raise ArchitectureError(f"expected an (N, d) matrix, got shape {thetas.shape}")
    d = param_count(architecture)
    if thetas.shape[1] != d:
        raise ArchitectureError(
            f"{architecture} expects {d} parameters per row, got {thetas.shape[1]}"
        )
    return [
        render_patch(SynthPatch(architecture, row), duration, sample_rate, noise_seed)
        for row in thetas
    ]
