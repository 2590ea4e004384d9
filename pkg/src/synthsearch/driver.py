"""The optimization loop: ask -> render -> embed -> score -> tell.

Each iteration draws a population of parameter vectors, renders them in a
batch, embeds the audio, scores every candidate against the target
embedding, and feeds the scores back to the strategy. A global best-so-far
archive is kept across all iterations in addition to the argmin over the
final population, since non-elitist strategies can regress late.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .architectures import param_count
from .embeddings import ProviderError, fitness_scores
from .engine import render_batch
from .strategies import Strategy, StrategyConfig, strategy_init


@dataclass
class OptimizationRun:
    """Record of one optimization: configuration, result, and history."""

    target: str
    architecture: str
    config: StrategyConfig
    iterations: int
    duration: float
    sample_rate: int
    best_theta: np.ndarray | None = None
    best_fitness: float = float("inf")
    final_best_theta: np.ndarray | None = None
    final_best_fitness: float = float("inf")
    history: list[tuple[float, float]] = field(default_factory=list)  # (best, mean)
    iteration_seconds: list[float] = field(default_factory=list)
    status: str = "completed"
    error: str | None = None

    @property
    def completed(self) -> bool:
        return self.status == "completed"


def optimize(
    target: str,
    architecture: str,
    provider,
    config: StrategyConfig,
    iterations: int = 300,
    duration: float = 2.0,
    sample_rate: int = 48_000,
    on_iteration=None,
) -> OptimizationRun:
    """Optimize synthesizer parameters toward a target embedding.

    ``target`` is a prompt for the service provider or a registered target
    name / WAV path for the surrogate. A provider failure before the first
    iteration raises ProviderError; a failure mid-run returns a run with
    ``status == "aborted"`` and the history accumulated so far.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    d = param_count(architecture)
    run = OptimizationRun(
        target=target, architecture=architecture, config=config,
        iterations=iterations, duration=duration, sample_rate=sample_rate,
    )

    target_embedding = provider.embed_text(target)  # raises if unreachable
    state: Strategy = strategy_init(config, d)
    try:
        for i in range(iterations):
            started = time.perf_counter()
            candidates = state.ask()
            buffers = render_batch(architecture, candidates, duration,
                                   sample_rate, noise_seed=config.seed)
            try:
                audio_embeddings = provider.embed_audio_batch(buffers)
            except ProviderError as exc:
                run.status = "aborted"
                run.error = f"provider failed at iteration {i + 1}: {exc}"
                return run
            scores = fitness_scores(audio_embeddings, target_embedding)
            state.tell(candidates, scores)

            run.best_fitness = state.best_fitness
            run.best_theta = state.best_theta
            run.history.append((state.best_fitness, float(scores.mean())))
            run.iteration_seconds.append(time.perf_counter() - started)

            final_idx = int(np.argmin(scores))
            run.final_best_fitness = float(scores[final_idx])
            run.final_best_theta = candidates[final_idx].copy()

            if on_iteration is not None:
                on_iteration(i + 1, run)
    finally:
        state.close()
    return run


def tune(
    strategy: str,
    search_space: dict,
    prompts,
    trials: int,
    inner_iterations: int,
    inner_popsize: int,
    seed: int = 0,
    evaluate=None,
    **run_kwargs,
) -> StrategyConfig:
    """Budgeted random search over strategy hyperparameters.

    ``search_space`` maps StrategyConfig field names to either a (low, high)
    tuple, sampled uniformly (integer endpoints sample integers), or a list
    of explicit choices. Each of the ``trials`` sampled configs is scored by
    its mean final best fitness over the prompt set and the best one wins.
    ``evaluate(config, prompt) -> float`` may be supplied to swap in a
    custom objective; by default each prompt is optimized with the provider
    passed through ``run_kwargs``.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    prompts = list(prompts)
    if not prompts:
        raise ValueError("prompt set must be non-empty")

    if evaluate is None:
        def evaluate(config: StrategyConfig, prompt: str) -> float:
            run = optimize(prompt, config=config,
                           iterations=inner_iterations, **run_kwargs)
            if not run.completed:
                raise ProviderError(run.error or "tuning run aborted")
            return run.best_fitness

    rng = np.random.Generator(np.random.PCG64(seed))
    best_config: StrategyConfig | None = None
    best_score = float("inf")
    for trial in range(trials):
        overrides = {}
        for name, space in search_space.items():
            if isinstance(space, tuple) and len(space) == 2 and all(
                isinstance(v, (int, float)) and not isinstance(v, bool) for v in space
            ):
                lo, hi = space
                value = rng.uniform(float(lo), float(hi))
                if isinstance(lo, int) and isinstance(hi, int):
                    value = int(round(value))
                overrides[name] = value
            else:
                overrides[name] = space[rng.integers(0, len(space))]
        config = StrategyConfig(
            strategy=strategy, population_size=inner_popsize,
            seed=seed + trial, **overrides,
        )
        config.validate()
        score = float(np.mean([evaluate(config, p) for p in prompts]))
        if score < best_score:
            best_score = score
            best_config = config
    return best_config
