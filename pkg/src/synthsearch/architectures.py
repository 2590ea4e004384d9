"""The six synthesizer architectures and their normalized parameter spaces.

Every patch lives in the unit box [0, 1]^d; descriptors map each normalized
component onto a physical range (linear or log curve). The layouts below are
the normative definition of d for each architecture:

    shaped_noise  18    noise + ADSR + LFO through a 2x1 matrix
    one_osc       23    sine VCO + ADSR + LFO through a 2x2 matrix
    no_lfo        29    sine + square-saw VCOs, two ADSRs, 2x4 matrix
    no_noise      51    two VCOs, ADSR-modulated LFO, 3x4 matrix
    voice         78    full keyboard voice: 6 ADSRs, 2 LFOs, 4x5 matrix
    voice_fm     130    voice plus an FM pair, 9 ADSRs, 7x7 matrix
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dsp import DEFAULT_CONTROL_RATE, DEFAULT_SAMPLE_RATE

ARCHITECTURE_IDS = ("shaped_noise", "one_osc", "no_lfo", "no_noise", "voice", "voice_fm")

# Nominal upper bound for time-like parameters; replaced by the actual render
# duration at mapping time (scales_with_duration).
_NOMINAL_DURATION = 2.0


class ArchitectureError(ValueError):
    """Unknown architecture id or invalid patch for an architecture."""


@dataclass(frozen=True)
class ParamDescriptor:
    """One normalized parameter: name, physical range, curve, and unit."""

    name: str
    min: float
    max: float
    curve: str = "linear"  # "linear" | "log"
    unit: str = "level"    # semitones | Hz | seconds | level | weight | radians
    scales_with_duration: bool = False

    def __post_init__(self):
        if not self.min < self.max:
            raise ValueError(f"{self.name}: min must be < max")
        if self.curve == "log" and self.min <= 0:
            raise ValueError(f"{self.name}: log curve requires min > 0")
        if self.curve not in ("linear", "log"):
            raise ValueError(f"{self.name}: unknown curve {self.curve!r}")

    def to_physical(self, theta: float, duration: float | None = None) -> float:
        """Map a normalized value in [0, 1] onto the physical range."""
        hi = self.max
        if self.scales_with_duration and duration is not None:
            hi = max(duration, self.min)
        if self.curve == "log":
            return self.min * (hi / self.min) ** theta
        return self.min + theta * (hi - self.min)


@dataclass(frozen=True)
class ArchitectureSpec:
    """A named parameter layout plus the wiring facts the renderer needs."""

    id: str
    params: tuple[ParamDescriptor, ...]
    n_direct_adsrs: int                 # envelopes routed straight into the matrix
    n_lfos: int
    lfo_has_adsrs: bool                 # each LFO carries amp + rate envelopes
    sources: tuple[str, ...]            # matrix inputs, in parameter order
    destinations: tuple[str, ...]       # matrix outputs, in parameter order
    audio_sources: tuple[str, ...]      # mixer inputs, in parameter order
    control_rate: int = DEFAULT_CONTROL_RATE
    sample_rate: int = DEFAULT_SAMPLE_RATE
    _index: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        names = [p.name for p in self.params]
        if len(set(names)) != len(names):
            raise ValueError(f"{self.id}: duplicate parameter names")
        if self.sample_rate % self.control_rate != 0:
            raise ValueError(f"{self.id}: control rate must divide sample rate")
        self._index.update({n: i for i, n in enumerate(names)})

    @property
    def param_count(self) -> int:
        return len(self.params)

    @property
    def param_names(self) -> tuple[str, ...]:
        return tuple(p.name for p in self.params)

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise ArchitectureError(f"{self.id} has no parameter {name!r}") from None

    def to_physical(self, theta: np.ndarray, duration: float) -> dict[str, float]:
        """Map a full normalized vector to a name -> physical value dict."""
        theta = np.asarray(theta, dtype=np.float64)
        if theta.shape != (self.param_count,):
            raise ArchitectureError(
                f"{self.id} expects {self.param_count} parameters, got {theta.shape}"
            )
        return {
            p.name: p.to_physical(theta[i], duration)
            for i, p in enumerate(self.params)
        }


@dataclass
class SynthPatch:
    """An architecture id plus a normalized parameter vector in [0, 1]^d."""

    architecture: str
    theta: np.ndarray

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=np.float64)
        spec = get_architecture(self.architecture)
        if self.theta.shape != (spec.param_count,):
            raise ArchitectureError(
                f"{self.architecture} expects {spec.param_count} parameters, "
                f"got shape {self.theta.shape}"
            )
        if not np.all(np.isfinite(self.theta)):
            raise ArchitectureError("patch parameters must be finite")
        if np.any(self.theta < 0.0) or np.any(self.theta > 1.0):
            raise ArchitectureError("patch parameters must lie in [0, 1]")

    @classmethod
    def random(cls, architecture: str, rng: np.random.Generator) -> "SynthPatch":
        d = param_count(architecture)
        return cls(architecture, rng.uniform(0.0, 1.0, d))


# ---------------------------------------------------------------------------
# Layout construction
# ---------------------------------------------------------------------------

def _keyboard() -> list[ParamDescriptor]:
    return [
        ParamDescriptor("keyboard.midi_f0", 0.0, 127.0, "linear", "semitones"),
        ParamDescriptor("keyboard.note_on_duration", 0.01, _NOMINAL_DURATION,
                        "log", "seconds", scales_with_duration=True),
    ]


def _adsr(prefix: str) -> list[ParamDescriptor]:
    seg = dict(curve="log", unit="seconds", scales_with_duration=True)
    return [
        ParamDescriptor(f"{prefix}.attack", 0.001, _NOMINAL_DURATION, **seg),
        ParamDescriptor(f"{prefix}.decay", 0.001, _NOMINAL_DURATION, **seg),
        ParamDescriptor(f"{prefix}.sustain", 0.0, 1.0, "linear", "level"),
        ParamDescriptor(f"{prefix}.release", 0.001, _NOMINAL_DURATION, **seg),
        ParamDescriptor(f"{prefix}.alpha", 0.1, 6.0, "linear", "level"),
    ]


def _lfo(prefix: str) -> list[ParamDescriptor]:
    out = [
        ParamDescriptor(f"{prefix}.frequency", 0.1, 20.0, "log", "Hz"),
        ParamDescriptor(f"{prefix}.mod_depth", 0.0, 1.0, "linear", "level"),
        ParamDescriptor(f"{prefix}.initial_phase", -math.pi, math.pi, "linear", "radians"),
    ]
    for shape in ("sin", "tri", "saw", "rsaw", "square"):
        out.append(ParamDescriptor(f"{prefix}.shape_{shape}", 0.0, 1.0, "linear", "weight"))
    return out


def _sine_vco(prefix: str) -> list[ParamDescriptor]:
    return [
        ParamDescriptor(f"{prefix}.tuning", -24.0, 24.0, "linear", "semitones"),
        ParamDescriptor(f"{prefix}.mod_depth", -96.0, 96.0, "linear", "semitones"),
        ParamDescriptor(f"{prefix}.initial_phase", -math.pi, math.pi, "linear", "radians"),
    ]


def _squaresaw_vco(prefix: str) -> list[ParamDescriptor]:
    return _sine_vco(prefix) + [
        ParamDescriptor(f"{prefix}.shape", 0.0, 1.0, "linear", "level"),
    ]


def _fm_pair() -> list[ParamDescriptor]:
    return (
        _sine_vco("fm_carrier")
        + _sine_vco("fm_modulator")
        + [ParamDescriptor("fm.index", 0.0, 12.0, "linear", "level")]
    )


def _matrix(sources, destinations) -> list[ParamDescriptor]:
    return [
        ParamDescriptor(f"matrix.{src}->{dst}", 0.0, 1.0, "linear", "weight")
        for src in sources
        for dst in destinations
    ]


def _mixer(audio_sources) -> list[ParamDescriptor]:
    return [
        ParamDescriptor(f"mixer.{src}", 0.0, 1.0, "linear", "level")
        for src in audio_sources
    ]


def _build(arch_id: str, n_direct_adsrs: int, n_lfos: int, lfo_has_adsrs: bool,
           destinations: tuple[str, ...], audio_sources: tuple[str, ...]) -> ArchitectureSpec:
    params = _keyboard()
    sources = []
    for i in range(1, n_direct_adsrs + 1):
        params += _adsr(f"adsr_{i}")
        sources.append(f"adsr_{i}")
    for i in range(1, n_lfos + 1):
        if lfo_has_adsrs:
            params += _adsr(f"lfo_{i}_amp_adsr")
            params += _adsr(f"lfo_{i}_rate_adsr")
        params += _lfo(f"lfo_{i}")
        sources.append(f"lfo_{i}")
    if "vco_sine" in audio_sources:
        params += _sine_vco("vco_sine")
    if "vco_squaresaw" in audio_sources:
        params += _squaresaw_vco("vco_squaresaw")
    if "fm" in audio_sources:
        params += _fm_pair()
    params += _mixer(audio_sources)
    params += _matrix(sources, destinations)
    return ArchitectureSpec(
        id=arch_id,
        params=tuple(params),
        n_direct_adsrs=n_direct_adsrs,
        n_lfos=n_lfos,
        lfo_has_adsrs=lfo_has_adsrs,
        sources=tuple(sources),
        destinations=destinations,
        audio_sources=audio_sources,
    )


def _build_registry() -> dict[str, ArchitectureSpec]:
    specs = [
        _build("shaped_noise", 1, 1, False,
               destinations=("noise_amp",),
               audio_sources=("noise",)),
        _build("one_osc", 1, 1, False,
               destinations=("vco_sine_pitch", "vco_sine_amp"),
               audio_sources=("vco_sine",)),
        _build("no_lfo", 2, 0, False,
               destinations=("vco_sine_pitch", "vco_sine_amp",
                             "vco_squaresaw_pitch", "vco_squaresaw_amp"),
               audio_sources=("vco_sine", "vco_squaresaw")),
        _build("no_noise", 2, 1, True,
               destinations=("vco_sine_pitch", "vco_sine_amp",
                             "vco_squaresaw_pitch", "vco_squaresaw_amp"),
               audio_sources=("vco_sine", "vco_squaresaw")),
        _build("voice", 2, 2, True,
               destinations=("vco_sine_pitch", "vco_sine_amp",
                             "vco_squaresaw_pitch", "vco_squaresaw_amp",
                             "noise_amp"),
               audio_sources=("vco_sine", "vco_squaresaw", "noise")),
        _build("voice_fm", 5, 2, True,
               destinations=("vco_sine_pitch", "vco_sine_amp",
                             "vco_squaresaw_pitch", "vco_squaresaw_amp",
                             "noise_amp", "fm_pitch", "fm_amp"),
               audio_sources=("vco_sine", "vco_squaresaw", "noise", "fm")),
    ]
    expected = dict(zip(ARCHITECTURE_IDS, (18, 23, 29, 51, 78, 130)))
    for spec in specs:
        if spec.param_count != expected[spec.id]:
            raise AssertionError(
                f"{spec.id} layout has {spec.param_count} parameters, "
                f"expected {expected[spec.id]}"
            )
    return {spec.id: spec for spec in specs}


_REGISTRY = _build_registry()


def get_architecture(arch_id: str) -> ArchitectureSpec:
    try:
        return _REGISTRY[arch_id]
    except KeyError:
        raise ArchitectureError(
            f"unknown architecture {arch_id!r}; valid ids: {', '.join(ARCHITECTURE_IDS)}"
        ) from None


def param_count(arch_id: str) -> int:
    """Number of normalized parameters for an architecture."""
    return get_architecture(arch_id).param_count


def interpolate(a: SynthPatch, b: SynthPatch, lam: float) -> SynthPatch:
    """Linear interpolation between two patches of the same architecture."""
    if a.architecture != b.architecture:
        raise ArchitectureError(
            f"cannot interpolate across architectures "
            f"({a.architecture} vs {b.architecture})"
        )
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"interpolation weight must be in [0, 1], got {lam}")
    return SynthPatch(a.architecture, (1.0 - lam) * a.theta + lam * b.theta)
