import base64
import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from synthsearch.dsp import AudioBuffer
from synthsearch.embeddings import EMBED_DIM

settings.register_profile(
    "suite",
    deadline=None,
    max_examples=25,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")

SR = 48_000


def make_sine(freq=440.0, duration=2.0, amplitude=1.0, sr=SR, phase=0.0):
    t = np.arange(int(duration * sr)) / sr
    return AudioBuffer(amplitude * np.sin(2.0 * np.pi * freq * t + phase), sr)


def make_noise(duration=2.0, amplitude=1.0, sr=SR, seed=0):
    gen = np.random.default_rng(seed)
    return AudioBuffer(amplitude * gen.uniform(-1.0, 1.0, int(duration * sr)), sr)


def make_silence(duration=2.0, sr=SR):
    return AudioBuffer(np.zeros(int(duration * sr)), sr)


@pytest.fixture
def sine_buffer():
    return make_sine()


@pytest.fixture
def noise_buffer():
    return make_noise()


@pytest.fixture
def silence_buffer():
    return make_silence()


# ---------------------------------------------------------------------------
# In-process embedding service speaking the /v1 wire protocol
# ---------------------------------------------------------------------------

def deterministic_embedding(key: bytes) -> list[float]:
    seed = int.from_bytes(key[:8].ljust(8, b"\0"), "little")
    gen = np.random.Generator(np.random.PCG64(seed))
    v = gen.normal(size=EMBED_DIM)
    return (v / np.linalg.norm(v)).tolist()


class MockService(BaseHTTPRequestHandler):
    info = {"model": "mock-embedder", "dim": 512, "sample_rate": 48_000}
    fail_next: list[int] = []          # HTTP codes to emit before succeeding
    audio_batch_sizes: list[int] = []  # request sizes seen, in order
    audio_pcm_lengths: list[int] = []

    def log_message(self, *args):
        pass

    def _reply(self, code, payload):
        body = json.dumps(payload).encode()
        self.send_response(code)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self):
        if self.path == "/v1/info":
            self._reply(200, self.info)
        else:
            self._reply(404, {"error": "not found"})

    def do_POST(self):
        if MockService.fail_next:
            code = MockService.fail_next.pop(0)
            self._reply(code, {"error": f"synthetic {code}"})
            return
        length = int(self.headers["Content-Length"])
        payload = json.loads(self.rfile.read(length))
        if self.path == "/v1/embed/text":
            texts = payload.get("texts", [])
            if any(not t for t in texts):
                self._reply(400, {"error": "empty string"})
                return
            self._reply(200, {"embeddings": [
                deterministic_embedding(b"text:" + t.encode()) for t in texts
            ]})
        elif self.path == "/v1/embed/audio":
            pcm = payload.get("pcm_f32_b64", [])
            MockService.audio_batch_sizes.append(len(pcm))
            rows = []
            for b64 in pcm:
                raw = base64.b64decode(b64)
                MockService.audio_pcm_lengths.append(len(raw) // 4)
                rows.append(deterministic_embedding(b"audio:" + raw[:64]))
            self._reply(200, {"embeddings": rows})
        else:
            self._reply(404, {"error": "not found"})


@pytest.fixture()
def service_url():
    server = HTTPServer(("127.0.0.1", 0), MockService)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    MockService.fail_next = []
    MockService.audio_batch_sizes = []
    MockService.audio_pcm_lengths = []
    yield f"http://127.0.0.1:{server.server_port}"
    server.shutdown()
