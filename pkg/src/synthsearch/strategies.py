"""Gradient-free ask/tell strategies over the unit box [0, 1]^d.

All strategies share one contract: the first ask returns a uniform
population (the search always starts from uniform parameter draws), every
candidate ever returned lies inside the box (native proposals are clipped),
fitness is minimized, and a global best-so-far archive survives across
generations with first-index tie-breaking. Advancing a strategy with a
fixed seed is fully deterministic.

The ``external`` strategy delegates ask/tell to a subprocess speaking
line-delimited JSON, so learned strategies can be plugged in without this
package shipping their meta-parameters.
"""

from __future__ import annotations

import json
import subprocess
from dataclasses import dataclass

import numpy as np

STRATEGY_IDS = ("random_search", "simple_ga", "pso", "cma_es", "external")


class StrategyProtocolError(RuntimeError):
    """ask/tell called out of order, or an external process misbehaved."""


@dataclass
class StrategyConfig:
    """Strategy selection plus hyperparameters.

    Documented bounds: population_size >= 2; 0 <= elite_count < population
    size; 1 <= truncation_k <= population size; mutation_sigma in (0, 1];
    inertia in [0, 1.2]; cognitive, social in [0, 4]; initial_sigma in (0, 1].
    """

    strategy: str = "cma_es"
    population_size: int = 50
    seed: int = 0
    # simple_ga
    elite_count: int = 1
    mutation_sigma: float = 0.1
    truncation_k: int | None = None  # defaults to population_size // 4
    # pso (standard constriction defaults)
    inertia: float = 0.7298
    cognitive: float = 1.49618
    social: float = 1.49618
    # cma_es
    initial_sigma: float = 0.3
    # external
    command: tuple[str, ...] = ()

    def resolved_truncation_k(self) -> int:
        if self.truncation_k is not None:
            return self.truncation_k
        return max(2, self.population_size // 4)

    def validate(self) -> None:
        if self.strategy not in STRATEGY_IDS:
            raise ValueError(
                f"unknown strategy {self.strategy!r}; valid: {', '.join(STRATEGY_IDS)}"
            )
        if self.population_size < 2:
            raise ValueError("population_size must be >= 2")
        if not 0 <= self.elite_count < self.population_size:
            raise ValueError("elite_count must satisfy 0 <= elite < population size")
        k = self.resolved_truncation_k()
        if not 1 <= k <= self.population_size:
            raise ValueError("truncation_k must satisfy 1 <= k <= population size")
        if not 0.0 < self.mutation_sigma <= 1.0:
            raise ValueError("mutation_sigma must be in (0, 1]")
        if not 0.0 <= self.inertia <= 1.2:
            raise ValueError("inertia must be in [0, 1.2]")
        if not (0.0 <= self.cognitive <= 4.0 and 0.0 <= self.social <= 4.0):
            raise ValueError("cognitive and social weights must be in [0, 4]")
        if not 0.0 < self.initial_sigma <= 1.0:
            raise ValueError("initial_sigma must be in (0, 1]")
        if self.strategy == "external" and not self.command:
            raise ValueError("external strategy requires a command")


class Strategy:
    """Common ask/tell machinery: box clipping, archive, protocol checks."""

    def __init__(self, config: StrategyConfig, d: int):
        if d < 1:
            raise ValueError("dimension must be >= 1")
        config.validate()
        self.config = config
        self.d = d
        self.n = config.population_size
        self.rng = np.random.Generator(np.random.PCG64(config.seed))
        self.generation = 0
        self.best_theta: np.ndarray | None = None
        self.best_fitness = np.inf
        self._awaiting_tell = False

    # -- subclass hooks ------------------------------------------------
    def _propose(self) -> np.ndarray:
        """Native proposal for generations >= 1 (before clipping)."""
        raise NotImplementedError

    def _update(self, candidates: np.ndarray, fitness: np.ndarray) -> None:
        """Strategy-specific state update after a ranked evaluation."""

    # -- public contract ------------------------------------------------
    def ask(self) -> np.ndarray:
        if self._awaiting_tell:
            raise StrategyProtocolError("ask called twice without an intervening tell")
        if self.generation == 0:
            candidates = self.rng.uniform(0.0, 1.0, (self.n, self.d))
        else:
            candidates = np.clip(self._propose(), 0.0, 1.0)
        self._awaiting_tell = True
        return candidates

    def tell(self, candidates: np.ndarray, fitness: np.ndarray) -> None:
        if not self._awaiting_tell:
            raise StrategyProtocolError("tell called without a pending ask")
        candidates = np.asarray(candidates, dtype=np.float64)
        fitness = np.asarray(fitness, dtype=np.float64).reshape(-1)
        if candidates.shape != (self.n, self.d):
            raise ValueError(
                f"candidates shape {candidates.shape} != ({self.n}, {self.d})"
            )
        if fitness.shape[0] != self.n:
            raise ValueError(f"{fitness.shape[0]} fitness values for {self.n} candidates")
        bad = np.flatnonzero(~np.isfinite(fitness))
        if bad.size:
            raise ValueError(
                f"non-finite fitness for candidate row(s) {bad.tolist()}; "
                "refusing to update strategy state"
            )
        idx = int(np.argmin(fitness))  # first minimum: lowest index wins ties
        if fitness[idx] < self.best_fitness:
            self.best_fitness = float(fitness[idx])
            self.best_theta = candidates[idx].copy()
        self._update(candidates, fitness)
        self.generation += 1
        self._awaiting_tell = False

    def close(self) -> None:
        """Release any resources (only the external strategy holds some)."""


class RandomSearch(Strategy):
    """Independent uniform draws every generation."""

    def _propose(self) -> np.ndarray:
        return self.rng.uniform(0.0, 1.0, (self.n, self.d))


class SimpleGA(Strategy):
    """Truncation-selection genetic algorithm with elitism and Gaussian mutation."""

    def __init__(self, config: StrategyConfig, d: int):
        super().__init__(config, d)
        self._parents: np.ndarray | None = None
        self._elites: np.ndarray | None = None

    def _propose(self) -> np.ndarray:
        k = self._parents.shape[0]
        out = np.empty((self.n, self.d))
        n_elite = self._elites.shape[0]
        out[:n_elite] = self._elites
        picks = self.rng.integers(0, k, self.n - n_elite)
        noise = self.rng.normal(0.0, self.config.mutation_sigma,
                                (self.n - n_elite, self.d))
        out[n_elite:] = self._parents[picks] + noise
        return out

    def _update(self, candidates: np.ndarray, fitness: np.ndarray) -> None:
        order = np.argsort(fitness, kind="stable")
        self._parents = candidates[order[: self.config.resolved_truncation_k()]].copy()
        self._elites = candidates[order[: self.config.elite_count]].copy()


class ParticleSwarm(Strategy):
    """Velocity-based swarm with personal and global attractors."""

    def __init__(self, config: StrategyConfig, d: int):
        super().__init__(config, d)
        self._x: np.ndarray | None = None
        self._v = np.zeros((self.n, d))
        self._pbest_x: np.ndarray | None = None
        self._pbest_f: np.ndarray | None = None
        self._gbest_x: np.ndarray | None = None

    def _propose(self) -> np.ndarray:
        c = self.config
        r1 = self.rng.uniform(0.0, 1.0, (self.n, self.d))
        r2 = self.rng.uniform(0.0, 1.0, (self.n, self.d))
        self._v = (
            c.inertia * self._v
            + c.cognitive * r1 * (self._pbest_x - self._x)
            + c.social * r2 * (self._gbest_x - self._x)
        )
        self._x = np.clip(self._x + self._v, 0.0, 1.0)
        return self._x

    def _update(self, candidates: np.ndarray, fitness: np.ndarray) -> None:
        self._x = candidates.copy()
        if self._pbest_x is None:
            self._pbest_x = candidates.copy()
            self._pbest_f = fitness.copy()
        else:
            better = fitness < self._pbest_f
            self._pbest_x[better] = candidates[better]
            self._pbest_f[better] = fitness[better]
        self._gbest_x = self._pbest_x[int(np.argmin(self._pbest_f))].copy()


class CmaEs(Strategy):
    """Covariance matrix adaptation with cumulative step-size control.

    Standard rank-one plus rank-mu updates with log-linear recombination
    weights. Out-of-box samples are repaired by clipping and the update is
    computed from the repaired points.
    """

    def __init__(self, config: StrategyConfig, d: int):
        super().__init__(config, d)
        lam = self.n
        mu = lam // 2
        w = np.log((lam + 1) / 2.0) - np.log(np.arange(1, mu + 1))
        self._w = w / w.sum()
        self._mu = mu
        self._mu_eff = 1.0 / np.sum(self._w ** 2)

        self._c_sigma = (self._mu_eff + 2) / (d + self._mu_eff + 5)
        self._d_sigma = (
            1 + 2 * max(0.0, np.sqrt((self._mu_eff - 1) / (d + 1)) - 1) + self._c_sigma
        )
        self._c_c = (4 + self._mu_eff / d) / (d + 4 + 2 * self._mu_eff / d)
        self._c_1 = 2 / ((d + 1.3) ** 2 + self._mu_eff)
        self._c_mu = min(
            1 - self._c_1,
            2 * (self._mu_eff - 2 + 1 / self._mu_eff) / ((d + 2) ** 2 + self._mu_eff),
        )
        self._chi_n = np.sqrt(d) * (1 - 1 / (4 * d) + 1 / (21 * d * d))

        self.mean = np.full(d, 0.5)
        self.sigma = config.initial_sigma
        self._cov = np.eye(d)
        self._p_sigma = np.zeros(d)
        self._p_c = np.zeros(d)
        self._decompose()

    def _decompose(self) -> None:
        self._cov = (self._cov + self._cov.T) / 2.0
        eigvals, eigvecs = np.linalg.eigh(self._cov)
        eigvals = np.maximum(eigvals, 1e-20)
        self._b = eigvecs
        self._d_diag = np.sqrt(eigvals)
        self._inv_sqrt = eigvecs @ np.diag(1.0 / self._d_diag) @ eigvecs.T

    def _propose(self) -> np.ndarray:
        z = self.rng.normal(size=(self.n, self.d))
        y = (z * self._d_diag) @ self._b.T
        return self.mean + self.sigma * y

    def _update(self, candidates: np.ndarray, fitness: np.ndarray) -> None:
        order = np.argsort(fitness, kind="stable")[: self._mu]
        y = (candidates[order] - self.mean) / self.sigma
        y_w = self._w @ y

        self.mean = self.mean + self.sigma * y_w
        self._p_sigma = (1 - self._c_sigma) * self._p_sigma + np.sqrt(
            self._c_sigma * (2 - self._c_sigma) * self._mu_eff
        ) * (self._inv_sqrt @ y_w)

        g = self.generation + 1
        norm_ps = np.linalg.norm(self._p_sigma)
        h_sigma = norm_ps / np.sqrt(
            1 - (1 - self._c_sigma) ** (2 * g)
        ) < (1.4 + 2 / (self.d + 1)) * self._chi_n
        self._p_c = (1 - self._c_c) * self._p_c + h_sigma * np.sqrt(
            self._c_c * (2 - self._c_c) * self._mu_eff
        ) * y_w

        rank_mu = (y * self._w[:, None]).T @ y
        self._cov = (
            (1 - self._c_1 - self._c_mu) * self._cov
            + self._c_1 * (
                np.outer(self._p_c, self._p_c)
                + (1 - h_sigma) * self._c_c * (2 - self._c_c) * self._cov
            )
            + self._c_mu * rank_mu
        )
        self.sigma *= np.exp((self._c_sigma / self._d_sigma) * (norm_ps / self._chi_n - 1))
        self.mean = np.clip(self.mean, 0.0, 1.0)
        self._decompose()


class ExternalStrategy(Strategy):
    """Delegates proposals to a subprocess over line-delimited JSON.

    Protocol, one JSON object per line on the child's stdio:
      -> {"op": "init", "d": d, "popsize": n, "seed": s}
      -> {"op": "ask"}                 <- {"candidates": [[...], ...]}
      -> {"op": "tell", "fitness": [...]}
    Any malformed reply aborts the run.
    """

    def __init__(self, config: StrategyConfig, d: int):
        super().__init__(config, d)
        try:
            self._proc = subprocess.Popen(
                list(config.command), stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                text=True, bufsize=1,
            )
        except OSError as exc:
            raise StrategyProtocolError(f"could not start {config.command}: {exc}")
        self._send({"op": "init", "d": d, "popsize": self.n, "seed": config.seed})

    def _send(self, obj: dict) -> None:
        if self._proc.poll() is not None:
            raise StrategyProtocolError("external strategy process exited")
        self._proc.stdin.write(json.dumps(obj) + "\n")
        self._proc.stdin.flush()

    def _read(self) -> dict:
        line = self._proc.stdout.readline()
        if not line:
            raise StrategyProtocolError("external strategy closed its stdout")
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            self.close()
            raise StrategyProtocolError(f"malformed line from external strategy: {exc}")
        if not isinstance(obj, dict):
            self.close()
            raise StrategyProtocolError("external strategy sent a non-object line")
        return obj

    def ask(self) -> np.ndarray:
        if self._awaiting_tell:
            raise StrategyProtocolError("ask called twice without an intervening tell")
        self._send({"op": "ask"})
        reply = self._read()
        candidates = np.asarray(reply.get("candidates"), dtype=np.float64)
        if candidates.shape != (self.n, self.d) or not np.all(np.isfinite(candidates)):
            self.close()
            raise StrategyProtocolError(
                f"external strategy sent candidates of shape {candidates.shape}"
            )
        candidates = np.clip(candidates, 0.0, 1.0)
        self._awaiting_tell = True
        return candidates

    def _update(self, candidates: np.ndarray, fitness: np.ndarray) -> None:
        self._send({"op": "tell", "fitness": fitness.tolist()})

    def close(self) -> None:
        if self._proc.poll() is None:
            self._proc.terminate()
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()


_STRATEGIES = {
    "random_search": RandomSearch,
    "simple_ga": SimpleGA,
    "pso": ParticleSwarm,
    "cma_es": CmaEs,
    "external": ExternalStrategy,
}


def strategy_init(config: StrategyConfig, d: int) -> Strategy:
    """Build a fresh strategy state for a d-dimensional search."""
    config.validate()
    return _STRATEGIES[config.strategy](config, d)
