"""Wire-protocol conformance for the embedding-service client.

Runs a small in-process HTTP server speaking the /v1 protocol and checks
the client's handshake, payload encoding, ordering, retry, and error
mapping behavior against it.
"""

import numpy as np
import pytest

from synthsearch.dsp import AudioBuffer
from synthsearch.embeddings import (
    EMBED_DIM,
    ProviderRequestError,
    ProviderTransportError,
    ServiceProvider,
)

from conftest import MockService


@pytest.fixture(autouse=True)
def fast_retries(monkeypatch):
    monkeypatch.setattr(ServiceProvider, "RETRY_DELAYS", (0.01, 0.01, 0.01))


def make_buffers(n, length=4800, sr=48_000):
    gen = np.random.default_rng(0)
    return [AudioBuffer(gen.uniform(-1, 1, length), sr) for _ in range(n)]


class TestHandshake:
    def test_info_pins_dim_and_rate(self, service_url):
        provider = ServiceProvider(service_url)
        assert provider.dim == 512
        assert provider.sample_rate == 48_000
        assert provider.model == "mock-embedder"

    def test_wrong_dim_rejected(self, service_url, monkeypatch):
        monkeypatch.setitem(MockService.info, "dim", 256)
        with pytest.raises(ProviderRequestError):
            ServiceProvider(service_url)

    def test_unreachable_host(self):
        with pytest.raises(ProviderTransportError):
            ServiceProvider("http://127.0.0.1:1", timeout=0.2)


class TestEmbedText:
    def test_unit_norm_and_determinism(self, service_url):
        provider = ServiceProvider(service_url)
        a = provider.embed_text("dog bark")
        b = provider.embed_text("dog bark")
        assert np.linalg.norm(a) == pytest.approx(1.0, abs=1e-4)
        assert np.array_equal(a, b)

    def test_client_error_carries_message(self, service_url):
        provider = ServiceProvider(service_url)
        MockService.fail_next = [400]
        with pytest.raises(ProviderRequestError, match="synthetic 400"):
            provider.embed_text("anything")


class TestEmbedAudio:
    def test_row_count_and_norms(self, service_url):
        provider = ServiceProvider(service_url)
        out = provider.embed_audio_batch(make_buffers(3))
        assert out.shape == (3, EMBED_DIM)
        assert np.allclose(np.linalg.norm(out, axis=1), 1.0, atol=1e-4)

    def test_order_preserved_across_chunks(self, service_url, monkeypatch):
        monkeypatch.setattr(ServiceProvider, "MAX_BATCH", 2)
        provider = ServiceProvider(service_url)
        buffers = make_buffers(5)
        chunked = provider.embed_audio_batch(buffers)
        monkeypatch.setattr(ServiceProvider, "MAX_BATCH", 256)
        whole = provider.embed_audio_batch(buffers)
        assert np.allclose(chunked, whole)
        assert MockService.audio_batch_sizes[:3] == [2, 2, 1]

    def test_resamples_to_service_rate(self, service_url):
        provider = ServiceProvider(service_url)
        buf = AudioBuffer(np.zeros(2400), 24_000)  # half the service rate
        provider.embed_audio_batch([buf])
        assert MockService.audio_pcm_lengths[-1] == 4800

    def test_empty_batch(self, service_url):
        out = ServiceProvider(service_url).embed_audio_batch([])
        assert out.shape == (0, EMBED_DIM)

    def test_mixed_rates_rejected(self, service_url):
        provider = ServiceProvider(service_url)
        with pytest.raises(ValueError):
            provider.embed_audio_batch([
                AudioBuffer(np.zeros(100), 48_000),
                AudioBuffer(np.zeros(100), 24_000),
            ])


class TestRetries:
    def test_5xx_then_success(self, service_url):
        provider = ServiceProvider(service_url)
        MockService.fail_next = [500, 503]
        out = provider.embed_audio_batch(make_buffers(1))
        assert out.shape == (1, EMBED_DIM)

    def test_exhausted_retries(self, service_url):
        provider = ServiceProvider(service_url)
        MockService.fail_next = [500, 500, 500, 500]
        with pytest.raises(ProviderTransportError):
            provider.embed_audio_batch(make_buffers(1))
