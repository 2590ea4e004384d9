"""Low-level control-rate and audio-rate signal generators.

Everything in this module is a pure function of its arguments: no hidden
state, no global RNG. Control signals run at a low rate (default 480 Hz)
and are bridged to the audio rate by linear interpolation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_SAMPLE_RATE = 48_000
DEFAULT_CONTROL_RATE = 480


@dataclass
class AudioBuffer:
    """Mono audio: float64 samples in [-1, 1] plus a sample rate in Hz."""

    samples: np.ndarray
    sample_rate: int = DEFAULT_SAMPLE_RATE

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1:
            raise ValueError("AudioBuffer samples must be one-dimensional (mono)")

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def duration(self) -> float:
        return len(self) / self.sample_rate


@dataclass
class ControlSignal:
    """A modulation signal sampled at the control rate."""

    values: np.ndarray
    rate: int = DEFAULT_CONTROL_RATE

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)

    def __len__(self) -> int:
        return self.values.shape[0]


def midi_to_hz(note):
    """Convert MIDI pitch (may be fractional, scalar or array) to Hz."""
    return 440.0 * 2.0 ** ((np.asarray(note, dtype=np.float64) - 69.0) / 12.0)


def render_adsr(
    attack: float,
    decay: float,
    sustain: float,
    release: float,
    alpha: float,
    note_on: float,
    n: int,
    rate: int = DEFAULT_CONTROL_RATE,
) -> ControlSignal:
    """Render an attack/decay/sustain/release envelope at the control rate.

    The attack rises 0 -> 1 as ``ramp**alpha``, the decay falls linearly
    1 -> sustain, the level then holds at ``sustain`` until ``note_on``
    seconds have elapsed, after which the release falls sustain -> 0 as
    ``(1 - ramp)**alpha``. Release timing is gated purely by ``note_on``:
    if the note ends mid-attack the envelope jumps into its release from
    the sustain level.
    """
    if n < 1:
        raise ValueError("envelope length n must be >= 1")
    for name, value in (("attack", attack), ("decay", decay),
                        ("release", release), ("note_on", note_on)):
        if value < 0:
            raise ValueError(f"{name} must be non-negative, got {value}")
    if not 0.0 <= sustain <= 1.0:
        raise ValueError(f"sustain must be in [0, 1], got {sustain}")

    t = np.arange(n, dtype=np.float64) / rate
    env = np.zeros(n)
    on = t < note_on

    if attack > 0:
        m = on & (t < attack)
        env[m] = (t[m] / attack) ** alpha
    m = on & (t >= attack)
    if decay > 0:
        md = m & (t < attack + decay)
        env[md] = 1.0 + (sustain - 1.0) * (t[md] - attack) / decay
        m = m & ~md
    env[m] = sustain
    if release > 0:
        m = ~on & (t < note_on + release)
        env[m] = sustain * (1.0 - (t[m] - note_on) / release) ** alpha

    return ControlSignal(env, rate)


# Waveform blend order used everywhere a 5-way shape weight vector appears.
LFO_SHAPES = ("sin", "tri", "saw", "rsaw", "square")


def _blend_waveforms(phase: np.ndarray, shape_weights) -> np.ndarray:
    """Convex blend of the five unit waveforms at the given phase (radians).

    The triangle starts at its trough, the saw rises -1 -> +1 over a
    period, the reverse saw mirrors it, and the square starts high.
    All-zero weights fall back to a pure sine.
    """
    w = np.asarray(shape_weights, dtype=np.float64)
    if w.shape != (5,):
        raise ValueError("shape_weights must have exactly 5 entries")
    if np.any(w < 0):
        raise ValueError("shape_weights must be non-negative")
    total = w.sum()
    if total <= 0:
        w = np.array([1.0, 0.0, 0.0, 0.0, 0.0])
        total = 1.0
    w = w / total

    x = (phase / (2.0 * np.pi)) % 1.0
    out = np.zeros_like(x)
    if w[0]:
        out += w[0] * np.sin(phase)
    if w[1]:
        out += w[1] * np.where(x < 0.5, 4.0 * x - 1.0, 3.0 - 4.0 * x)
    if w[2]:
        out += w[2] * (2.0 * x - 1.0)
    if w[3]:
        out += w[3] * (1.0 - 2.0 * x)
    if w[4]:
        out += w[4] * np.where(x < 0.5, 1.0, -1.0)
    return out


def render_lfo(
    frequency: float,
    initial_phase: float,
    shape_weights,
    n: int,
    rate: int = DEFAULT_CONTROL_RATE,
) -> ControlSignal:
    """Render a constant-frequency LFO as a weighted blend of five shapes."""
    t = np.arange(n, dtype=np.float64) / rate
    phase = initial_phase + 2.0 * np.pi * frequency * t
    return ControlSignal(_blend_waveforms(phase, shape_weights), rate)


def render_lfo_swept(
    frequencies: np.ndarray,
    initial_phase: float,
    shape_weights,
    rate: int = DEFAULT_CONTROL_RATE,
) -> ControlSignal:
    """Render an LFO whose frequency varies per control sample.

    Phase is accumulated so frequency changes never cause discontinuities.
    Sample 0 sits exactly at ``initial_phase``.
    """
    f = np.asarray(frequencies, dtype=np.float64)
    phase = initial_phase + 2.0 * np.pi * (np.cumsum(f) - f[0]) / rate
    return ControlSignal(_blend_waveforms(phase, shape_weights), rate)


# The oscillator kernels below mutate their `midi` argument in place; the
# public ops hand them a fresh copy, the renderer hands them arrays it owns.

def midi_to_phase(midi: np.ndarray, initial_phase: float, sample_rate: int) -> np.ndarray:
    """Destructively turn a MIDI-pitch array into accumulated phase.

    phi[0] == initial_phase and phi[k] = phi[k-1] + 2*pi*hz[k]/sr, so the
    phase is continuous however the pitch moves.
    """
    midi -= 69.0
    midi *= 1.0 / 12.0
    np.exp2(midi, out=midi)
    midi *= 440.0
    first = midi[0]
    np.cumsum(midi, out=midi)
    midi -= first
    midi *= 2.0 * np.pi / sample_rate
    midi += initial_phase
    return midi


def sine_from_midi(midi: np.ndarray, initial_phase: float, sample_rate: int) -> np.ndarray:
    phase = midi_to_phase(midi, initial_phase, sample_rate)
    return np.sin(phase, out=phase)


def squaresaw_from_midi(midi: np.ndarray, shape: float, initial_phase: float,
                        sample_rate: int) -> np.ndarray:
    # shape * square + (1 - shape) * saw, with saw = 2x - 1 rising and
    # square = +1 on the first half period.
    x = midi_to_phase(midi, initial_phase, sample_rate)
    x *= 1.0 / (2.0 * np.pi)
    np.mod(x, 1.0, out=x)
    square_part = np.where(x < 0.5, shape, -shape)
    x *= 2.0 * (1.0 - shape)
    x -= 1.0 - shape
    x += square_part
    return x


def render_sine_vco(
    pitch_control: ControlSignal,
    initial_phase: float,
    n_audio: int,
) -> AudioBuffer:
    """Phase-accumulating sine oscillator driven by a MIDI-pitch control.

    ``pitch_control`` must already be at the audio rate; sample 0 equals
    ``sin(initial_phase)`` exactly.
    """
    if len(pitch_control) < n_audio:
        raise ValueError("pitch control shorter than requested audio length")
    midi = pitch_control.values[:n_audio].astype(np.float64)
    return AudioBuffer(sine_from_midi(midi, initial_phase, pitch_control.rate),
                       pitch_control.rate)


def render_squaresaw_vco(
    pitch_control: ControlSignal,
    shape: float,
    initial_phase: float,
    n_audio: int,
) -> AudioBuffer:
    """Oscillator blending a naive square (shape=1) and rising saw (shape=0)."""
    if not 0.0 <= shape <= 1.0:
        raise ValueError(f"shape must be in [0, 1], got {shape}")
    if len(pitch_control) < n_audio:
        raise ValueError("pitch control shorter than requested audio length")
    midi = pitch_control.values[:n_audio].astype(np.float64)
    return AudioBuffer(
        squaresaw_from_midi(midi, shape, initial_phase, pitch_control.rate),
        pitch_control.rate,
    )


def render_noise(seed: int, n_audio: int, sample_rate: int = DEFAULT_SAMPLE_RATE) -> AudioBuffer:
    """Uniform white noise in [-1, 1] from a counter-based PRNG keyed by seed.

    Philox is counter-based, so identical (seed, n) always reproduce the
    same buffer regardless of any other RNG activity in the process.
    """
    gen = np.random.Generator(np.random.Philox(key=np.uint64(seed & 0xFFFFFFFFFFFFFFFF)))
    return AudioBuffer(gen.uniform(-1.0, 1.0, n_audio), sample_rate)


def mod_matrix(inputs, weights) -> list[ControlSignal]:
    """Route M control inputs to K outputs through a weight matrix.

    ``weights`` has shape (M, K) with entries in [0, 1]; each output is the
    weighted sum of all inputs, hard-clipped to [-1, 1].
    """
    sigs = list(inputs)
    if not sigs:
        raise ValueError("mod_matrix requires at least one input")
    lengths = {len(s) for s in sigs}
    if len(lengths) != 1:
        raise ValueError(f"mod_matrix inputs have mismatched lengths: {sorted(lengths)}")
    rate = sigs[0].rate
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 2 or w.shape[0] != len(sigs):
        raise ValueError(f"weights must be (n_inputs, n_outputs), got {w.shape}")
    if np.any(w < 0) or np.any(w > 1):
        raise ValueError("mod_matrix weights must lie in [0, 1]")
    stacked = np.stack([s.values for s in sigs])          # (M, n)
    mixed = np.clip(w.T @ stacked, -1.0, 1.0)             # (K, n)
    return [ControlSignal(row, rate) for row in mixed]


def lerp_upsample_rows(values: np.ndarray, ratio: int, n_out: int | None = None) -> np.ndarray:
    """Linearly interpolate each row of (K, n) onto a grid ``ratio`` x denser.

    Input point k lands exactly on output index k * ratio; output samples
    past the last input point hold its value. Returns (K, n_out) where
    n_out defaults to n * ratio.
    """
    values = np.atleast_2d(np.asarray(values, dtype=np.float64))
    k, n = values.shape
    if n_out is None:
        n_out = n * ratio
    frac = np.arange(ratio, dtype=np.float64) / ratio
    step = np.zeros_like(values)
    step[:, :-1] = values[:, 1:] - values[:, :-1]
    blocks = step[:, :, None] * frac
    blocks += values[:, :, None]
    out = blocks.reshape(k, n * ratio)
    return out[:, :n_out] if n_out != n * ratio else out


def upsample_control(c: ControlSignal, target_rate: int) -> ControlSignal:
    """Bridge a control signal to a higher rate by linear interpolation.

    The target rate must be an integer multiple of the control rate.
    Control point k lands exactly on output index k * ratio; samples past
    the final control point hold its value.
    """
    if target_rate % c.rate != 0:
        raise ValueError(
            f"target rate {target_rate} is not an integer multiple of {c.rate}"
        )
    ratio = target_rate // c.rate
    if ratio == 1:
        return ControlSignal(c.values.copy(), target_rate)
    return ControlSignal(lerp_upsample_rows(c.values, ratio)[0], target_rate)


def stft_magnitudes(
    samples: np.ndarray,
    frame_size: int = 2048,
    hop: int = 1024,
) -> np.ndarray:
    """Hann-windowed magnitude spectra, shape (n_frames, frame_size//2 + 1).

    Frames are [i*hop, i*hop + frame_size); a signal shorter than one frame
    yields an empty (0, bins) array.
    """
    x = np.asarray(samples, dtype=np.float64)
    if len(x) < frame_size:
        return np.zeros((0, frame_size // 2 + 1))
    window = np.hanning(frame_size)
    frames = np.lib.stride_tricks.sliding_window_view(x, frame_size)[::hop]
    return np.abs(np.fft.rfft(frames * window, axis=1))
