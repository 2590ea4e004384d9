"""Synthesizer programming by evolutionary search toward embedding targets."""

from .architectures import (
    ARCHITECTURE_IDS,
    ArchitectureError,
    ArchitectureSpec,
    ParamDescriptor,
    SynthPatch,
    get_architecture,
    interpolate,
    param_count,
)
from .descriptors import DescriptorReport, describe
from .driver import OptimizationRun, optimize, tune
from .dsp import AudioBuffer, ControlSignal
from .embeddings import (
    EMBED_DIM,
    MockProvider,
    ProviderError,
    ServiceProvider,
    SurrogateProvider,
    fitness_scores,
    make_provider,
    surrogate_embed,
)
from .engine import render_batch, render_patch
from .fileio import PatchFile, PatchMeta, load_patch, read_wav, save_patch, write_wav
from .strategies import StrategyConfig, strategy_init

__version__ = "0.1.0"

__all__ = [
    "ARCHITECTURE_IDS",
    "ArchitectureError",
    "ArchitectureSpec",
    "AudioBuffer",
    "ControlSignal",
    "DescriptorReport",
    "EMBED_DIM",
    "MockProvider",
    "OptimizationRun",
    "ParamDescriptor",
    "PatchFile",
    "PatchMeta",
    "ProviderError",
    "ServiceProvider",
    "StrategyConfig",
    "SurrogateProvider",
    "SynthPatch",
    "describe",
    "fitness_scores",
    "get_architecture",
    "interpolate",
    "load_patch",
    "make_provider",
    "optimize",
    "param_count",
    "read_wav",
    "render_batch",
    "render_patch",
    "save_patch",
    "strategy_init",
    "surrogate_embed",
    "tune",
    "write_wav",
    "__version__",
]
