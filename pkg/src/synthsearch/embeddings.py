"""Embedding providers and the similarity fitness they induce.

Fitness of a candidate sound is the negative inner product between its
embedding and the target embedding (lower is better). Three providers share
that contract:

* ``SurrogateProvider`` - deterministic spectral features; a prompt is the
  name of a registered target sound (or a path to one), so optimization
  runs are fully reproducible offline.
* ``ServiceProvider`` - HTTP client for an external embedding service
  speaking the /v1 wire protocol.
* ``MockProvider`` - hash-seeded unit vectors for protocol tests.

Every provider returns unit-L2, finite, 512-dim float vectors.
"""

from __future__ import annotations

import base64
import hashlib
import json
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
import requests

from .dsp import AudioBuffer, stft_magnitudes

EMBED_DIM = 512
N_MELS = 128
FRAME_SIZE = 2048
HOP_SIZE = 1024
ENERGY_FLOOR = 1e-10


class ProviderError(RuntimeError):
    """Base class for embedding-provider failures."""


class ProviderTransportError(ProviderError):
    """The service could not be reached or kept failing after retries."""


class ProviderRequestError(ProviderError):
    """The service rejected a request (4xx) or broke the wire protocol."""


class UnknownTargetError(ProviderError):
    """The surrogate provider has no target registered under this name."""


class AudioTooShortError(ValueError):
    """Buffer shorter than one analysis frame."""


# ---------------------------------------------------------------------------
# Surrogate spectral features
# ---------------------------------------------------------------------------

def _hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def _mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


_MEL_CACHE: dict[tuple[int, int, int], np.ndarray] = {}


def mel_filterbank(sample_rate: int, n_fft: int = FRAME_SIZE, n_mels: int = N_MELS) -> np.ndarray:
    """Triangular mel filterbank, shape (n_mels, n_fft//2 + 1)."""
    key = (sample_rate, n_fft, n_mels)
    cached = _MEL_CACHE.get(key)
    if cached is not None:
        return cached
    n_bins = n_fft // 2 + 1
    mel_pts = np.linspace(_hz_to_mel(0.0), _hz_to_mel(sample_rate / 2.0), n_mels + 2)
    hz_pts = _mel_to_hz(mel_pts)
    bin_freqs = np.arange(n_bins) * sample_rate / n_fft
    fb = np.zeros((n_mels, n_bins))
    for i in range(n_mels):
        lo, mid, hi = hz_pts[i], hz_pts[i + 1], hz_pts[i + 2]
        up = (bin_freqs - lo) / (mid - lo)
        down = (hi - bin_freqs) / (hi - mid)
        fb[i] = np.clip(np.minimum(up, down), 0.0, None)
    fb.flags.writeable = False
    _MEL_CACHE[key] = fb
    return fb


def surrogate_embed(buffer: AudioBuffer) -> np.ndarray:
    """Deterministic 512-dim unit embedding from log-mel statistics.

    128 per-band means of the log-mel energies, their 128 per-band standard
    deviations, and 256 zeros of padding, L2-normalized.
    """
    mags = stft_magnitudes(buffer.samples, FRAME_SIZE, HOP_SIZE)
    if mags.shape[0] == 0:
        raise AudioTooShortError(
            f"buffer of {len(buffer)} samples is shorter than one "
            f"{FRAME_SIZE}-sample analysis frame"
        )
    fb = mel_filterbank(buffer.sample_rate)
    energies = (mags ** 2) @ fb.T                     # (frames, n_mels)
    log_e = np.log(energies + ENERGY_FLOOR)
    vec = np.concatenate([
        log_e.mean(axis=0),
        log_e.std(axis=0),
        np.zeros(EMBED_DIM - 2 * N_MELS),
    ])
    return vec / np.linalg.norm(vec)


def as_unit_embedding(values) -> np.ndarray:
    """Validate and L2-normalize a 512-dim embedding."""
    v = np.asarray(values, dtype=np.float64).reshape(-1)
    if v.shape != (EMBED_DIM,):
        raise ProviderRequestError(f"expected a {EMBED_DIM}-dim embedding, got {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ProviderRequestError("embedding contains non-finite values")
    norm = np.linalg.norm(v)
    if norm == 0:
        raise ProviderRequestError("embedding has zero norm")
    return v / norm


def fitness_scores(audio_embeddings: np.ndarray, text_embedding: np.ndarray) -> np.ndarray:
    """Negative inner products between each audio row and the target. Lower is better."""
    e = np.asarray(audio_embeddings, dtype=np.float64)
    if e.ndim == 1:
        e = e[None, :]
    t = np.asarray(text_embedding, dtype=np.float64).reshape(-1)
    if e.shape[1] != t.shape[0]:
        raise ValueError(f"embedding dims differ: {e.shape[1]} vs {t.shape[0]}")
    if not (np.all(np.isfinite(e)) and np.all(np.isfinite(t))):
        raise ValueError("non-finite embedding passed to fitness_scores")
    return -(e @ t)


# ---------------------------------------------------------------------------
# Providers
# ---------------------------------------------------------------------------

def _audio_cache_key(buffer: AudioBuffer) -> str:
    h = hashlib.sha256()
    h.update(str(buffer.sample_rate).encode())
    h.update(buffer.samples.astype("<f8").tobytes())
    return h.hexdigest()


class _CacheMixin:
    """Transparent embedding cache keyed by provider id + exact input bytes."""

    def __init__(self, cache: bool):
        self._cache: dict[tuple[str, str], np.ndarray] | None = {} if cache else None

    def _cached(self, kind: str, key: str, compute):
        if self._cache is None:
            return compute()
        full_key = (kind, key)
        if full_key not in self._cache:
            self._cache[full_key] = compute()
        return self._cache[full_key]


class SurrogateProvider(_CacheMixin):
    """Spectral-feature provider; prompts name registered target sounds.

    A prompt resolves, in order: an explicitly registered target, then an
    existing WAV path (auto-registered on first use). Anything else raises
    UnknownTargetError.
    """

    kind = "surrogate"
    dim = EMBED_DIM

    def __init__(self, targets=None, cache: bool = True):
        super().__init__(cache)
        self._targets: dict[str, AudioBuffer] = {}
        for name, audio in dict(targets or {}).items():
            self.register(name, audio)

    def register(self, name: str, audio) -> None:
        if isinstance(audio, (str, Path)):
            from .fileio import read_wav

            audio = read_wav(audio)
        self._targets[name] = audio

    def target(self, name: str) -> AudioBuffer:
        if name not in self._targets:
            path = Path(name)
            if path.suffix.lower() == ".wav" and path.exists():
                self.register(name, path)
            else:
                raise UnknownTargetError(
                    f"no target registered under {name!r} and it is not a WAV path"
                )
        return self._targets[name]

    def embed_text(self, prompt: str) -> np.ndarray:
        if not prompt:
            raise ValueError("prompt must be non-empty")
        audio = self.target(prompt)
        return self._cached("audio", _audio_cache_key(audio),
                            lambda: surrogate_embed(audio))

    def embed_audio_batch(self, buffers) -> np.ndarray:
        buffers = list(buffers)
        if not buffers:
            return np.zeros((0, EMBED_DIM))
        return np.stack([
            self._cached("audio", _audio_cache_key(b), lambda b=b: surrogate_embed(b))
            for b in buffers
        ])


class MockProvider(_CacheMixin):
    """Hash-seeded pseudo-embeddings; deterministic, no audio analysis."""

    kind = "mock"
    dim = EMBED_DIM

    def __init__(self, cache: bool = False):
        super().__init__(cache)

    @staticmethod
    def _vector_for(key: bytes) -> np.ndarray:
        digest = hashlib.sha256(key).digest()
        seed = int.from_bytes(digest[:8], "little")
        gen = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
        v = gen.normal(size=EMBED_DIM)
        return v / np.linalg.norm(v)

    def embed_text(self, prompt: str) -> np.ndarray:
        if not prompt:
            raise ValueError("prompt must be non-empty")
        return self._vector_for(b"text:" + prompt.encode("utf-8"))

    def embed_audio_batch(self, buffers) -> np.ndarray:
        buffers = list(buffers)
        if not buffers:
            return np.zeros((0, EMBED_DIM))
        return np.stack([
            self._vector_for(b"audio:" + b.samples.astype("<f4").tobytes())
            for b in buffers
        ])


class ServiceProvider(_CacheMixin):
    """Client for an external embedding service over HTTP/JSON.

    The handshake (GET /v1/info) pins the embedding dimension and the input
    sample rate; audio is resampled client-side to the advertised rate.
    5xx responses and transport failures are retried up to 3 times with
    exponential backoff; 4xx responses surface the server's error message.
    Batches are chunked and dispatched with a bounded number of in-flight
    requests while preserving row order.
    """

    kind = "service"
    MAX_BATCH = 256
    RETRY_DELAYS = (0.5, 1.0, 2.0)

    def __init__(self, base_url: str, cache: bool = False, max_in_flight: int = 4,
                 timeout: float = 30.0):
        super().__init__(cache)
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.max_in_flight = max_in_flight
        self._session = requests.Session()
        info = self._request("GET", "/v1/info")
        self.model = info.get("model", "unknown")
        self.dim = int(info.get("dim", 0))
        self.sample_rate = int(info.get("sample_rate", 0))
        if self.dim != EMBED_DIM:
            raise ProviderRequestError(
                f"service advertises dim {self.dim}, expected {EMBED_DIM}"
            )

    def _request(self, method: str, path: str, payload=None) -> dict:
        url = self.base_url + path
        last_exc: Exception | None = None
        for attempt in range(len(self.RETRY_DELAYS) + 1):
            if attempt:
                time.sleep(self.RETRY_DELAYS[attempt - 1])
            try:
                resp = self._session.request(method, url, json=payload,
                                             timeout=self.timeout)
            except requests.RequestException as exc:
                last_exc = exc
                continue
            if 500 <= resp.status_code < 600:
                last_exc = ProviderTransportError(
                    f"{url} returned {resp.status_code}"
                )
                continue
            if resp.status_code != 200:
                try:
                    message = resp.json().get("error", resp.text)
                except ValueError:
                    message = resp.text
                raise ProviderRequestError(
                    f"{url} returned {resp.status_code}: {message}"
                )
            try:
                return resp.json()
            except ValueError as exc:
                raise ProviderRequestError(f"{url} returned invalid JSON") from exc
        raise ProviderTransportError(f"giving up on {url}: {last_exc}")

    def embed_text(self, prompt: str) -> np.ndarray:
        if not prompt:
            raise ValueError("prompt must be non-empty")

        def compute():
            reply = self._request("POST", "/v1/embed/text", {"texts": [prompt]})
            rows = reply.get("embeddings")
            if not isinstance(rows, list) or len(rows) != 1:
                raise ProviderRequestError("service returned a malformed text embedding")
            return as_unit_embedding(rows[0])

        key = hashlib.sha256(prompt.encode("utf-8")).hexdigest()
        return self._cached("text", key, compute)

    def _resample(self, buffer: AudioBuffer) -> np.ndarray:
        if buffer.sample_rate == self.sample_rate:
            return buffer.samples
        n_out = int(round(len(buffer) * self.sample_rate / buffer.sample_rate))
        positions = np.arange(n_out) * buffer.sample_rate / self.sample_rate
        return np.interp(positions, np.arange(len(buffer)), buffer.samples)

    def _embed_audio_chunk(self, buffers: list[AudioBuffer]) -> np.ndarray:
        pcm = [
            base64.b64encode(self._resample(b).astype("<f4").tobytes()).decode("ascii")
            for b in buffers
        ]
        reply = self._request("POST", "/v1/embed/audio",
                              {"sample_rate": self.sample_rate, "pcm_f32_b64": pcm})
        rows = reply.get("embeddings")
        if not isinstance(rows, list) or len(rows) != len(buffers):
            raise ProviderRequestError(
                f"service returned {0 if not isinstance(rows, list) else len(rows)} "
                f"rows for a {len(buffers)}-row request"
            )
        return np.stack([as_unit_embedding(r) for r in rows])

    def embed_audio_batch(self, buffers) -> np.ndarray:
        buffers = list(buffers)
        if not buffers:
            return np.zeros((0, EMBED_DIM))
        rates = {b.sample_rate for b in buffers}
        if len(rates) != 1:
            raise ValueError(f"batch mixes sample rates: {sorted(rates)}")
        chunks = [buffers[i:i + self.MAX_BATCH]
                  for i in range(0, len(buffers), self.MAX_BATCH)]
        if len(chunks) == 1:
            results = [self._embed_audio_chunk(chunks[0])]
        else:
            with ThreadPoolExecutor(max_workers=self.max_in_flight) as pool:
                results = list(pool.map(self._embed_audio_chunk, chunks))
        return np.vstack(results)


class AudioTargetAdapter:
    """Wraps any provider so the optimization target is a reference sound.

    ``embed_text`` ignores the prompt and returns the embedding of the
    wrapped audio, computed by the inner provider; audio batches pass
    through unchanged. This is how inverse synthesis runs against the
    service provider, which otherwise only accepts text targets.
    """

    def __init__(self, inner, audio: AudioBuffer):
        self.inner = inner
        self.kind = f"audio-target({getattr(inner, 'kind', '?')})"
        self.dim = inner.dim
        self._audio = audio

    def embed_text(self, prompt: str) -> np.ndarray:
        return self.inner.embed_audio_batch([self._audio])[0]

    def embed_audio_batch(self, buffers) -> np.ndarray:
        return self.inner.embed_audio_batch(buffers)


def make_provider(spec: str, cache: bool = True):
    """Build a provider from a CLI-style spec: 'surrogate', 'mock', 'service:URL'."""
    if spec == "surrogate":
        return SurrogateProvider(cache=cache)
    if spec == "mock":
        return MockProvider(cache=cache)
    if spec.startswith("service:"):
        return ServiceProvider(spec.split(":", 1)[1], cache=cache)
    raise ValueError(
        f"unknown provider {spec!r}; expected surrogate, mock, or service:URL"
    )
